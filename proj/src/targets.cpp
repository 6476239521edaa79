#include "compo/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace compo {

namespace {

void check_input(const std::string& label, std::size_t arity, const Box& domain,
                 std::span<const double> x) {
    if (x.size() != arity) {
        std::ostringstream os;
        os << label << ": arity mismatch, expected " << arity << " inputs, got " << x.size();
        throw ConfigError(os.str());
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        double tol = 1e-12 * (1.0 + std::abs(domain.hi[i]) + std::abs(domain.lo[i]));
        if (x[i] < domain.lo[i] - tol || x[i] > domain.hi[i] + tol) {
            std::ostringstream os;
            os << label << ": input coordinate " << i << " = " << x[i] << " outside ["
               << domain.lo[i] << ", " << domain.hi[i] << "]";
            throw ConfigError(os.str());
        }
    }
}

} // namespace

double ScalarTarget::eval(std::span<const double> x) const {
    check_input(label, arity, domain, x);
    return fn(x);
}

CompositionalTarget::CompositionalTarget(TreeTopology topo, std::vector<BivariateFn> node_fns,
                                         std::vector<std::size_t> leaf_order, Box domain)
    : topo_(topo), node_fns_(std::move(node_fns)), leaf_order_(std::move(leaf_order)),
      domain_(std::move(domain)) {
    if (node_fns_.size() != topo_.internal_count())
        throw ConfigError("tree target: expected one function per internal vertex");
    for (std::size_t v = 1; v < topo_.leaves; ++v)
        if (!node_fns_[v - 1]) throw ConfigError("tree target: empty function at vertex " + std::to_string(v));
    if (leaf_order_.size() != topo_.leaves)
        throw ConfigError("tree target: leaf_order must have one entry per leaf");
    std::vector<bool> seen(topo_.leaves, false);
    for (std::size_t p : leaf_order_) {
        if (p >= topo_.leaves || seen[p]) throw ConfigError("tree target: leaf_order is not a permutation");
        seen[p] = true;
    }
    if (domain_.dim() != topo_.leaves) throw ConfigError("tree target: domain dimension mismatch");
}

std::vector<double> CompositionalTarget::eval_nodes(std::span<const double> x) const {
    check_input("tree target", topo_.leaves, domain_, x);
    const std::size_t d = topo_.leaves;
    std::vector<double> val(2 * d);
    for (std::size_t i = 0; i < d; ++i) val[d + i] = x[leaf_order_[i]];
    for (std::size_t v = d; v-- > 1;) val[v] = node_fns_[v - 1](val[2 * v], val[2 * v + 1]);
    return {val.begin() + 1, val.begin() + static_cast<std::ptrdiff_t>(d)};
}

double CompositionalTarget::eval(std::span<const double> x) const { return eval_nodes(x)[0]; }

const BivariateFn& CompositionalTarget::node_fn(std::size_t vertex) const {
    if (!topo_.valid_internal(vertex))
        throw ConfigError("tree target: no internal vertex " + std::to_string(vertex));
    return node_fns_[vertex - 1];
}

CompositionalTarget CompositionalTarget::with_leaf_order(std::vector<std::size_t> order) const {
    return CompositionalTarget(topo_, node_fns_, std::move(order), domain_);
}

ScalarTarget CompositionalTarget::as_scalar(const std::string& label) const {
    CompositionalTarget copy = *this;
    return ScalarTarget{label, arity(), domain_,
                        [copy](std::span<const double> x) { return copy.eval(x); }};
}

CompositionalTarget build_tree_target(std::size_t d,
                                      const std::map<std::size_t, BivariateFn>& node_fns) {
    if (!TreeTopology::is_power_of_two(d) || d < 2)
        throw ConfigError("build_tree_target: d must be a power of two >= 2, got " + std::to_string(d));
    TreeTopology topo(d);
    std::vector<BivariateFn> fns(topo.internal_count());
    for (const auto& [v, fn] : node_fns) {
        if (!topo.valid_internal(v))
            throw ConfigError("build_tree_target: vertex " + std::to_string(v) +
                              " is not an internal vertex of a " + std::to_string(d) + "-leaf tree");
        fns[v - 1] = fn;
    }
    for (std::size_t v = 1; v < d; ++v)
        if (!fns[v - 1])
            throw ConfigError("build_tree_target: missing function for vertex " + std::to_string(v));
    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    // constituents are total functions; the stated box just has to cover every
    // study window (grid fits sample up to [-8, 8]^d)
    return CompositionalTarget(topo, std::move(fns), std::move(order), Box::cube(d, -8.0, 8.0));
}

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

ScalarTarget make_cos4() {
    const double pi = std::numbers::pi;
    return ScalarTarget{"cos4", 1, Box::cube(1, -2 * pi, 2 * pi), [](std::span<const double> x) {
                            double c = std::cos(x[0]);
                            double t = 2 * c * c - 1;
                            return 2 * t * t - 1;
                        }};
}

namespace {

double q_inner_raw(const QPolyCoeffs& q, double x, double y) {
    return q.a * x * x * y * y + q.b * x * x * y + q.c * x * y * y + q.d * x * x +
           2 * q.e * x * y + q.f * y * y + 2 * q.g * x + 2 * q.h * y + q.i;
}

double q_inner_sup(const QPolyCoeffs& q) {
    double sup = 0;
    const std::size_t n = 401;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double x = -1.0 + 2.0 * i / (n - 1);
            double y = -1.0 + 2.0 * j / (n - 1);
            sup = std::max(sup, std::abs(q_inner_raw(q, x, y)));
        }
    return sup;
}

} // namespace

ScalarTarget make_q_inner(const QPolyCoeffs& c) {
    double sup = q_inner_sup(c);
    double scale = sup > 0 ? 1.0 / sup : 1.0;
    return ScalarTarget{"q_inner", 2, Box::cube(2, -1.0, 1.0),
                        [c, scale](std::span<const double> x) {
                            return scale * q_inner_raw(c, x[0], x[1]);
                        }};
}

ScalarTarget make_q_poly(const QPolyCoeffs& c) {
    ScalarTarget inner = make_q_inner(c);
    auto inner_fn = inner.fn;
    return ScalarTarget{"q_poly", 2, Box::cube(2, -1.0, 1.0),
                        [inner_fn](std::span<const double> x) {
                            double t = inner_fn(x);
                            for (int k = 0; k < 10; ++k) t = t * t; // t^(2^10)
                            return t;
                        }};
}

ScalarTarget make_gauss_bump(std::size_t dim) {
    if (dim < 1) throw ConfigError("gauss_bump: dimension must be >= 1");
    return ScalarTarget{"gauss_bump", dim, Box::cube(dim, -12.0, 12.0),
                        [](std::span<const double> x) {
                            double s = 0;
                            for (double xi : x) s += xi * xi;
                            return std::exp(-s);
                        }};
}

ScalarTarget make_gauss_bump_shifted(std::size_t dim, double offset) {
    if (dim < 1) throw ConfigError("gauss_bump_off: dimension must be >= 1");
    return ScalarTarget{"gauss_bump_off", dim, Box::cube(dim, -12.0, 12.0),
                        [offset](std::span<const double> x) {
                            double s = 0;
                            for (double xi : x) s += (xi - offset) * (xi - offset);
                            return std::exp(-s);
                        }};
}

BivariateFn make_random_node_fn(Rng& rng) {
    // degree-<=3 bivariate trigonometric polynomial: sum of c_jk psi_j(a) psi_k(b)
    // over j+k <= 3, with psi = {1, cos t, sin 2t, cos 3t}.
    std::vector<double> coeff;
    std::vector<std::pair<int, int>> terms;
    for (int j = 0; j <= 3; ++j)
        for (int k = 0; j + k <= 3; ++k) {
            terms.emplace_back(j, k);
            coeff.push_back(rng.uniform(-1.0, 1.0));
        }
    auto psi = [](int j, double t) {
        switch (j) {
            case 0: return 1.0;
            case 1: return std::cos(t);
            case 2: return std::sin(2 * t);
            default: return std::cos(3 * t);
        }
    };
    auto raw = [coeff, terms, psi](double a, double b) {
        double s = 0;
        for (std::size_t i = 0; i < terms.size(); ++i)
            s += coeff[i] * psi(terms[i].first, a) * psi(terms[i].second, b);
        return s;
    };
    // Rescale so the node maps [-1,1]^2 into [-1,1]; the grid estimate of the
    // sup carries a 5% margin so interior nodes stay strictly in-domain.
    double sup = 0;
    const std::size_t n = 201;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double a = -1.0 + 2.0 * i / (n - 1);
            double b = -1.0 + 2.0 * j / (n - 1);
            sup = std::max(sup, std::abs(raw(a, b)));
        }
    double scale = sup > 0 ? 1.0 / (1.05 * sup) : 1.0;
    return [raw, scale](double a, double b) { return scale * raw(a, b); };
}

CompositionalTarget make_random_tree(std::size_t d, std::uint64_t seed) {
    if (!TreeTopology::is_power_of_two(d) || d < 2)
        throw ConfigError("tree_random: d must be a power of two >= 2, got " + std::to_string(d));
    Rng rng(seed);
    std::map<std::size_t, BivariateFn> fns;
    for (std::size_t v = 1; v < d; ++v) fns[v] = make_random_node_fn(rng);
    return build_tree_target(d, fns);
}

std::vector<std::string> builtin_target_labels() {
    return {"cos4", "q_poly", "gauss_bump", "gauss_bump_off", "tree_random"};
}

ScalarTarget lookup_target(const std::string& label, const std::map<std::string, double>& params) {
    auto get = [&](const std::string& key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (label == "cos4") return make_cos4();
    if (label == "q_poly") {
        QPolyCoeffs c{get("A", 1), get("B", 0), get("C", 0), get("D", 0), get("E", 0),
                      get("F", 0), get("G", 0), get("H", 0), get("I", 0)};
        return make_q_poly(c);
    }
    if (label == "gauss_bump") return make_gauss_bump(static_cast<std::size_t>(get("d", 1)));
    if (label == "gauss_bump_off")
        return make_gauss_bump_shifted(static_cast<std::size_t>(get("d", 1)),
                                       get("offset", 1.0 / 3.0));
    if (label == "tree_random") {
        std::size_t d = static_cast<std::size_t>(get("d", 4));
        auto seed = static_cast<std::uint64_t>(get("seed", 1));
        return make_random_tree(d, seed).as_scalar("tree_random");
    }
    throw ConfigError("target catalog: unknown label '" + label + "'");
}

} // namespace compo
