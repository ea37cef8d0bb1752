#include "gsr/core/serial.hpp"

#include <cstring>

#include "gsr/core/error.hpp"

namespace gsr {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'G', 'S', 'R', 'A'};

template <typename T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw CorruptDatasetError("array file truncated");
    return v;
}

}  // namespace

void write_array_f32(const fs::path& path, const Tensor<float>& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os.write(kMagic, 4);
    put<uint32_t>(os, 1);
    put<uint8_t>(os, 0);  // f32
    put<uint8_t>(os, static_cast<uint8_t>(t.rank()));
    put<uint16_t>(os, 0);
    for (int d : t.shape) put<int64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.ptr()), t.numel() * sizeof(float));
    if (!os) throw Error("short write to " + path.string());
}

Tensor<float> read_array_f32(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DependencyError("missing array file " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw CorruptDatasetError("bad array magic in " + path.string());
    if (get<uint32_t>(is) != 1) throw CorruptDatasetError("unknown array version");
    if (get<uint8_t>(is) != 0) throw CorruptDatasetError("unexpected dtype in " + path.string());
    int rank = get<uint8_t>(is);
    get<uint16_t>(is);
    Shape shape;
    for (int i = 0; i < rank; ++i) shape.push_back(static_cast<int>(get<int64_t>(is)));
    Tensor<float> t(shape);
    is.read(reinterpret_cast<char*>(t.ptr()), t.numel() * sizeof(float));
    if (!is) throw CorruptDatasetError("array payload truncated in " + path.string());
    return t;
}

bool checkpoint_exists(const fs::path& dir) {
    return fs::exists(dir / "manifest.json");
}

void save_checkpoint(const fs::path& dir, const ParamStore<float>& ps,
                     const CheckpointMeta& meta) {
    fs::create_directories(dir / "params");
    json m;
    m["format"] = "gsr-checkpoint-v1";
    m["kind"] = meta.kind;
    m["config_digest"] = meta.config_digest;
    m["seed"] = meta.seed;
    m["step"] = meta.step;
    json arrays = json::array();
    for (int i = 0; i < ps.count(); ++i) {
        const auto& p = ps.at(i);
        write_array_f32(dir / "params" / (p.name + ".arr"), p.value);
        arrays.push_back(p.name);
    }
    m["arrays"] = arrays;
    m["extra"] = meta.extra.is_null() ? json::object() : meta.extra;
    write_json_file(dir / "manifest.json", m);
}

CheckpointMeta load_checkpoint(const fs::path& dir, ParamStore<float>& ps) {
    if (!checkpoint_exists(dir))
        throw DependencyError("missing checkpoint: " + (dir / "manifest.json").string());
    json m = read_json_file(dir / "manifest.json");
    if (m.value("format", "") != "gsr-checkpoint-v1")
        throw CorruptDatasetError("unknown checkpoint format in " + dir.string());
    for (int i = 0; i < ps.count(); ++i) {
        auto& p = ps.at(i);
        Tensor<float> t = read_array_f32(dir / "params" / (p.name + ".arr"));
        if (t.shape != p.value.shape)
            throw CorruptDatasetError("checkpoint shape mismatch for " + p.name + ": stored " +
                                      shape_str(t.shape) + " vs model " + shape_str(p.value.shape));
        p.value = std::move(t);
    }
    CheckpointMeta meta;
    meta.kind = m.value("kind", "");
    meta.config_digest = m.value("config_digest", "");
    meta.seed = m.value("seed", uint64_t(0));
    meta.step = m.value("step", int64_t(0));
    meta.extra = m.value("extra", json::object());
    return meta;
}

json read_json_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw DependencyError("missing file " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw CorruptDatasetError("bad json in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

}  // namespace gsr
