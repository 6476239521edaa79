#include "compo/boolean_fourier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "compo/csv.hpp"

namespace compo {

FourierTable::FourierTable(std::size_t vars, std::vector<double> coeffs)
    : vars_(vars), coeffs_(std::move(coeffs)) {
    if (vars_ < 1 || vars_ > kMaxBooleanVars)
        throw ConfigError("FourierTable: variable count must be in [1, " +
                          std::to_string(kMaxBooleanVars) + "]");
    if (coeffs_.size() != (std::size_t{1} << vars_))
        throw ConfigError("FourierTable: expected 2^n coefficients");
}

double FourierTable::sum_squares() const {
    double s = 0;
    for (double c : coeffs_) s += c * c;
    return s;
}

namespace {

void walsh_hadamard(std::vector<double>& v) {
    const std::size_t n = v.size();
    for (std::size_t len = 1; len < n; len <<= 1)
        for (std::size_t i = 0; i < n; i += len << 1)
            for (std::size_t j = i; j < i + len; ++j) {
                double a = v[j], b = v[j + len];
                v[j] = a + b;
                v[j + len] = a - b;
            }
}

} // namespace

FourierTable fourier_expand(const BooleanFn& f, std::size_t vars) {
    if (vars < 1 || vars > kMaxBooleanVars)
        throw ConfigError("fourier_expand: variable count must be in [1, " +
                          std::to_string(kMaxBooleanVars) + "]");
    const std::size_t size = std::size_t{1} << vars;
    std::vector<double> v(size);
    std::vector<int> x(vars);
    for (std::size_t t = 0; t < size; ++t) {
        for (std::size_t i = 0; i < vars; ++i) x[i] = (t >> i) & 1 ? -1 : 1;
        v[t] = f(x);
    }
    walsh_hadamard(v);
    const double scale = 1.0 / static_cast<double>(size);
    for (double& c : v) c *= scale;
    return FourierTable(vars, std::move(v));
}

BooleanApprox low_order_approx(const FourierTable& table, std::size_t k) {
    if (k > table.vars()) throw ConfigError("low_order_approx: degree k exceeds variable count");
    std::vector<double> kept(table.size(), 0.0);
    double err = 0;
    for (std::size_t s = 0; s < table.size(); ++s) {
        double c = table.coeffs()[s];
        if (std::popcount(static_cast<std::uint32_t>(s)) <= static_cast<int>(k))
            kept[s] = c;
        else
            err += c * c;
    }
    return BooleanApprox{FourierTable(table.vars(), std::move(kept)), err};
}

bool lex_subset_less(std::uint32_t a, std::uint32_t b) {
    if (a == b) return false;
    std::uint32_t diff = a ^ b;
    unsigned i = static_cast<unsigned>(std::countr_zero(diff));
    std::uint32_t at_or_above = ~std::uint32_t{0} << i;
    if (a & (std::uint32_t{1} << i)) {
        // A's next element is i; A precedes B iff B still has a later element
        return (b & at_or_above) != 0;
    }
    // B's next element is i; A precedes B iff A is exhausted (a prefix of B)
    return (a & at_or_above) == 0;
}

BooleanApprox sparse_approx(const FourierTable& table, std::size_t t) {
    if (t < 1 || t > table.size())
        throw ConfigError("sparse_approx: coefficient count t must be in [1, 2^n]");
    std::vector<std::uint32_t> order(table.size());
    std::iota(order.begin(), order.end(), 0u);
    const auto& c = table.coeffs();
    std::sort(order.begin(), order.end(), [&c](std::uint32_t x, std::uint32_t y) {
        double ax = std::abs(c[x]), ay = std::abs(c[y]);
        if (ax != ay) return ax > ay;
        return lex_subset_less(x, y);
    });
    std::vector<double> kept(table.size(), 0.0);
    for (std::size_t i = 0; i < t; ++i) kept[order[i]] = c[order[i]];
    double err = 0;
    for (std::size_t i = t; i < order.size(); ++i) err += c[order[i]] * c[order[i]];
    return BooleanApprox{FourierTable(table.vars(), std::move(kept)), err};
}

double reconstruct(const FourierTable& table, std::span<const int> x) {
    if (x.size() != table.vars())
        throw ConfigError("reconstruct: input length must equal the variable count");
    std::uint32_t t = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 1 && x[i] != -1)
            throw ConfigError("reconstruct: inputs must be +1 or -1, got " + std::to_string(x[i]) +
                              " at position " + std::to_string(i));
        if (x[i] == -1) t |= std::uint32_t{1} << i;
    }
    double s = 0;
    const auto& c = table.coeffs();
    for (std::size_t mask = 0; mask < c.size(); ++mask)
        if (c[mask] != 0)
            s += c[mask] * (std::popcount(static_cast<std::uint32_t>(mask) & t) & 1 ? -1.0 : 1.0);
    return s;
}

std::vector<double> reconstruct_all(const FourierTable& table) {
    std::vector<double> v = table.coeffs();
    walsh_hadamard(v); // unscaled inverse
    return v;
}

void write_coeff_csv(const FourierTable& table, std::ostream& os) {
    CsvWriter csv(os, "fourier-coeffs");
    csv.row({"subset_mask_hex", "coefficient"});
    char buf[16];
    for (std::size_t mask = 0; mask < table.size(); ++mask) {
        std::snprintf(buf, sizeof buf, "0x%zx", mask);
        csv.row({buf, CsvWriter::num(table.coeffs()[mask])});
    }
}

} // namespace compo
