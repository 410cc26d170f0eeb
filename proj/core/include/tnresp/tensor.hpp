#pragma once

#include <span>
#include <string>
#include <vector>

#include "tnresp/grid.hpp"

namespace tnresp {

enum class Side { minus, plus };
enum class Split { none, plus, minus };
// Complexity label of a leg: neutral Q, or one member of the charged pair.
enum class Label { neutral, f, fdag };

const char* to_string(Side s);
const char* to_string(Split s);
const char* to_string(Label l);

struct LegMeta {
    Side side = Side::plus;
    Split split = Split::none;
    Label label = Label::neutral;
    std::string source = "none";
};

// Dense tensor over grid-time tuples, leg 0 slowest.
struct CorrelationTensor {
    TimeGrid grid;
    std::vector<LegMeta> legs;
    std::vector<cplx> data;

    CorrelationTensor() = default;
    CorrelationTensor(TimeGrid g, std::vector<LegMeta> l);

    int rank() const { return static_cast<int>(legs.size()); }
    int extent() const { return grid.count; }
    size_t size() const { return data.size(); }
    size_t offset(std::span<const int> idx) const;
    cplx& at(std::span<const int> idx) { return data[offset(idx)]; }
    cplx at(std::span<const int> idx) const { return data[offset(idx)]; }
    cplx& at(std::initializer_list<int> idx) { return at(std::span<const int>(idx.begin(), idx.size())); }
    cplx at(std::initializer_list<int> idx) const { return at(std::span<const int>(idx.begin(), idx.size())); }
    // Inverse of offset().
    void unravel(size_t flat, std::vector<int>& idx) const;

    double max_abs() const;
    double max_imag() const;
    CorrelationTensor& operator+=(const CorrelationTensor& o);
    CorrelationTensor& operator*=(cplx s);
};

double max_abs_diff(const CorrelationTensor& a, const CorrelationTensor& b);

// Contract `leg` with an N x N matrix K: out[.., t, ..] = sum_s K(t, s) in[.., s, ..].
CorrelationTensor apply_leg_matrix(const CorrelationTensor& in, int leg, const Mat& K);

// Apply the split kernel along one leg (order-then-split: the tensor must already hold
// the ordered average). Throws PreconditionError if the leg already carries a split.
CorrelationTensor convolve_leg(const CorrelationTensor& in, int leg, SplitSign sign);

// As convolve_leg, but the dummy time only runs over grid indices <= upper_time.
CorrelationTensor convolve_leg_truncated(const CorrelationTensor& in, int leg, SplitSign sign, int upper_time);

// Average over all permutations of the legs listed in `group` (values must agree in
// extent; metadata is kept from the input).
CorrelationTensor symmetrize_legs(const CorrelationTensor& in, const std::vector<int>& group);

// Permute legs: out leg i = in leg perm[i].
CorrelationTensor permute_legs(const CorrelationTensor& in, const std::vector<int>& perm);

}  // namespace tnresp
