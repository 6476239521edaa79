#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "compo/errors.hpp"

namespace compo {

/// Largest supported variable count for exact expansion (2^n evaluations).
inline constexpr std::size_t kMaxBooleanVars = 20;

/// Real-valued function on the Boolean cube {-1,1}^n.
using BooleanFn = std::function<double(std::span<const int>)>;

/// Exact multilinear (Fourier) expansion of a Boolean function: coefficient
/// f_hat(S) stored densely at the bitmask of S (bit i-1 set <=> variable i
/// in S).
class FourierTable {
public:
    FourierTable(std::size_t vars, std::vector<double> coeffs);

    std::size_t vars() const { return vars_; }
    std::size_t size() const { return coeffs_.size(); }
    double coeff(std::uint32_t subset_mask) const { return coeffs_.at(subset_mask); }
    const std::vector<double>& coeffs() const { return coeffs_; }

    /// Sum of squared coefficients (the Parseval mass).
    double sum_squares() const;

private:
    std::size_t vars_;
    std::vector<double> coeffs_;
};

/// f_hat(S) = 2^-n sum_x f(x) prod_{i in S} x_i, computed with the fast
/// Walsh-Hadamard butterfly in O(n 2^n). Input index convention: bit i of
/// the evaluation index set <=> x_{i+1} = -1.
FourierTable fourier_expand(const BooleanFn& f, std::size_t vars);

/// An approximant (a truncated table) plus the exact squared L2 error of the
/// truncation (the Parseval mass of the dropped coefficients).
struct BooleanApprox {
    FourierTable table;
    double squared_error = 0;
};

/// Keep coefficients of degree |S| <= k.
BooleanApprox low_order_approx(const FourierTable& table, std::size_t k);

/// Keep the t largest-magnitude coefficients; exact ties resolved by
/// lexicographic subset order.
BooleanApprox sparse_approx(const FourierTable& table, std::size_t t);

/// sum_S f_hat(S) prod_{i in S} x_i at one point of {-1,1}^n.
double reconstruct(const FourierTable& table, std::span<const int> x);

/// All 2^n reconstructed values, indexed by the evaluation convention above.
std::vector<double> reconstruct_all(const FourierTable& table);

/// Lexicographic order on subsets viewed as sorted element sequences
/// (the sparse_approx tie-break).
bool lex_subset_less(std::uint32_t a, std::uint32_t b);

/// CSV export: subset bitmask (hex), coefficient.
void write_coeff_csv(const FourierTable& table, std::ostream& os);

} // namespace compo
