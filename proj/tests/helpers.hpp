#pragma once

#include "ecgnet/record_io.hpp"
#include "ecgnet/rng.hpp"
#include "ecgnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace testing {

inline ecgnet::Tensor random_tensor(std::vector<std::size_t> shape, ecgnet::Rng& rng, double scale = 1.0) {
    ecgnet::Tensor t(std::move(shape));
    for (auto& v : t.data()) v = scale * rng.normal();
    return t;
}

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

// Central difference of f with respect to v, restoring v afterwards.
inline double central_difference(const std::function<double()>& f, double& v, double h) {
    const double saved = v;
    v = saved + h;
    const double up = f();
    v = saved - h;
    const double down = f();
    v = saved;
    return (up - down) / (2.0 * h);
}

inline double dot(const ecgnet::Tensor& a, const ecgnet::Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline ecgnet::LabelVector labels_of(std::initializer_list<const char*> abbreviations) {
    const auto& map = ecgnet::ClassMap::standard();
    ecgnet::LabelVector v{};
    for (const char* a : abbreviations) v[*map.index_of_abbreviation(a)] = 1;
    return v;
}

inline std::size_t class_index(const char* abbreviation) {
    return *ecgnet::ClassMap::standard().index_of_abbreviation(abbreviation);
}

} // namespace testing
