#ifndef GSR_CORE_SERIAL_HPP
#define GSR_CORE_SERIAL_HPP

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "gsr/core/nn.hpp"
#include "gsr/core/tensor.hpp"

namespace gsr {

using json = nlohmann::ordered_json;

// Flat array container, little-endian:
//   magic "GSRA" | u32 version=1 | u8 dtype (0=f32,1=f64) | u8 rank |
//   u16 reserved | i64 dims[rank] | payload
void write_array_f32(const std::filesystem::path& path, const Tensor<float>& t);
Tensor<float> read_array_f32(const std::filesystem::path& path);

// Checkpoint archive: <dir>/manifest.json + <dir>/params/<name>.arr.
// The manifest carries config digest, seed, and step count plus any
// module-specific entries under "extra".
struct CheckpointMeta {
    std::string kind;           // "sr", "autoencoder", "teachers"
    std::string config_digest;
    uint64_t seed = 0;
    int64_t step = 0;
    json extra;                 // vocabularies, latent stats, train ids, ...
};

void save_checkpoint(const std::filesystem::path& dir, const ParamStore<float>& ps,
                     const CheckpointMeta& meta);

// Loads values into an already-constructed store (names and shapes must
// match the architecture). Throws DependencyError when dir/manifest is
// missing and CorruptDatasetError on malformed content.
CheckpointMeta load_checkpoint(const std::filesystem::path& dir, ParamStore<float>& ps);

bool checkpoint_exists(const std::filesystem::path& dir);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace gsr

#endif
