#ifndef GSR_CORE_TENSOR_HPP
#define GSR_CORE_TENSOR_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "gsr/core/error.hpp"
#include "gsr/core/rng.hpp"

namespace gsr {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

// Dense row-major tensor over a dynamic shape, rank <= 4 in practice.
// Matrix views are Eigen Maps over the flat storage.
template <typename S>
struct Tensor {
    Shape shape;
    ArrX<S> data;

    Tensor() = default;
    explicit Tensor(Shape sh) : shape(std::move(sh)) {
        data = ArrX<S>::Zero(shape_numel(shape));
    }
    Tensor(Shape sh, ArrX<S> d) : shape(std::move(sh)), data(std::move(d)) {
        if (data.size() != shape_numel(shape))
            throw ShapeError("tensor data size does not match shape " + shape_str(shape));
    }

    static Tensor zeros(Shape sh) { return Tensor(std::move(sh)); }

    static Tensor full(Shape sh, S v) {
        Tensor t(std::move(sh));
        t.data.setConstant(v);
        return t;
    }

    static Tensor randn(Shape sh, Rng& rng, double stddev = 1.0) {
        Tensor t(std::move(sh));
        for (int64_t i = 0; i < t.data.size(); ++i)
            t.data[i] = static_cast<S>(rng.normal(0.0, stddev));
        return t;
    }

    int64_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    S* ptr() { return data.data(); }
    const S* ptr() const { return data.data(); }

    // (rows, cols) matrix view over the flat storage
    Eigen::Map<MatX<S>> mat(int rows, int cols) {
        check_view(rows, cols);
        return Eigen::Map<MatX<S>>(data.data(), rows, cols);
    }
    Eigen::Map<const MatX<S>> mat(int rows, int cols) const {
        check_view(rows, cols);
        return Eigen::Map<const MatX<S>>(data.data(), rows, cols);
    }

    // rank-2 tensors view themselves
    Eigen::Map<MatX<S>> mat() { return mat(shape.at(0), static_cast<int>(numel() / shape.at(0))); }
    Eigen::Map<const MatX<S>> mat() const {
        return mat(shape.at(0), static_cast<int>(numel() / shape.at(0)));
    }

    bool all_finite() const { return data.isFinite().all(); }

    template <typename T>
    Tensor<T> cast() const {
        Tensor<T> out;
        out.shape = shape;
        out.data = data.template cast<T>();
        return out;
    }

private:
    void check_view(int rows, int cols) const {
        if (static_cast<int64_t>(rows) * cols != numel())
            throw ShapeError("matrix view " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " on tensor " + shape_str(shape));
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace gsr

#endif
