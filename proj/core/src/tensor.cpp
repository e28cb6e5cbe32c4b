#include "semstyle/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace semstyle {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("tensor dimension must be non-negative");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
        throw std::invalid_argument("tensor data size does not match shape " + shape_str());
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

double& Tensor::at(int c, int y, int x) {
    return data_[static_cast<size_t>((static_cast<std::int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
}

double Tensor::at(int c, int y, int x) const {
    return data_[static_cast<size_t>((static_cast<std::int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
}

double& Tensor::at(int r, int c) { return data_[static_cast<size_t>(static_cast<std::int64_t>(r) * shape_[1] + c)]; }

double Tensor::at(int r, int c) const {
    return data_[static_cast<size_t>(static_cast<std::int64_t>(r) * shape_[1] + c)];
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ")";
    return os.str();
}

}  // namespace semstyle
