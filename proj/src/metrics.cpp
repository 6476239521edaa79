#include "compo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "compo/csv.hpp"

namespace compo {

SampleMethod default_sup_method(std::size_t dim) {
    return dim > 2 ? SampleMethod::quasirandom : SampleMethod::grid;
}

std::size_t default_sup_resolution(std::size_t dim) { return dim > 2 ? 100000 : 10000; }

namespace {

std::vector<std::vector<double>> sup_samples(const Box& domain, SampleMethod method,
                                             std::size_t resolution) {
    if (resolution < 1000)
        throw ConfigError("sup_norm_error: resolution must be at least 1000 points");
    if (method == SampleMethod::grid) {
        const std::size_t d = domain.dim();
        auto per_dim = static_cast<std::size_t>(
            std::ceil(std::pow(static_cast<double>(resolution), 1.0 / static_cast<double>(d))));
        per_dim = std::max<std::size_t>(per_dim, 2);
        return grid_points(domain, per_dim);
    }
    return quasirandom_points(domain, resolution, 1);
}

} // namespace

SupError sup_norm_error(const VectorFn& f, const VectorFn& g, const Box& domain,
                        SampleMethod method, std::size_t resolution) {
    auto pts = sup_samples(domain, method, resolution);
    double sup = 0;
    for (const auto& x : pts) sup = std::max(sup, std::abs(f(x) - g(x)));
    return SupError{sup, pts.size()};
}

SupError sup_norm_error(const ScalarTarget& f, const Net& g, const Box& domain,
                        SampleMethod method, std::size_t resolution) {
    if (f.arity != g.input_dim() || domain.dim() != f.arity)
        throw ConfigError("sup_norm_error: dimension mismatch between target, network and domain");
    return sup_norm_error(f.fn, [&g](std::span<const double> x) { return g.eval(x); }, domain,
                          method, resolution);
}

namespace {

template <typename NodeEval>
TreeError tree_error_impl(const CompositionalTarget& target, const TreeTopology& net_topo,
                          NodeEval&& node_eval, const std::vector<Box>& node_domains,
                          SampleMethod method, std::size_t resolution) {
    const auto& topo = target.topology();
    if (topo.leaves != net_topo.leaves)
        throw ConfigError("tree_error: target and network topologies differ");
    if (node_domains.size() != topo.internal_count())
        throw ConfigError("tree_error: need one domain per internal vertex");
    TreeError te;
    te.per_node.resize(topo.internal_count());
    for (std::size_t v = 1; v < topo.leaves; ++v) {
        const auto& fv = target.node_fn(v);
        auto f = [&fv](std::span<const double> x) { return fv(x[0], x[1]); };
        auto g = [&node_eval, v](std::span<const double> x) { return node_eval(v, x); };
        te.per_node[v - 1] = sup_norm_error(f, g, node_domains[v - 1], method, resolution).value;
        te.total += te.per_node[v - 1];
    }
    return te;
}

} // namespace

TreeError tree_error(const CompositionalTarget& target, const DeepTreeNet& net,
                     const std::vector<Box>& node_domains, SampleMethod method,
                     std::size_t resolution) {
    return tree_error_impl(
        target, net.topology(),
        [&net](std::size_t v, std::span<const double> x) { return net.node(v).eval(x); },
        node_domains, method, resolution);
}

TreeError tree_error(const CompositionalTarget& target, const TreeGaussianNet& net,
                     const std::vector<Box>& node_domains, SampleMethod method,
                     std::size_t resolution) {
    return tree_error_impl(
        target, net.topology(),
        [&net](std::size_t v, std::span<const double> x) { return net.node(v).eval(x); },
        node_domains, method, resolution);
}

LineFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) throw ConfigError("fit_scaling_exponent: need at least 3 pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pairs.size());
    for (const auto& [x, y] : pairs) {
        if (!(x > 0) || !(y > 0))
            throw ConfigError("fit_scaling_exponent: entries must be strictly positive");
        double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0) throw ConfigError("fit_scaling_exponent: degenerate abscissae");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ssr = 0;
    for (const auto& [x, y] : pairs) {
        double r = std::log(y) - (fit.intercept + fit.slope * std::log(x));
        ssr += r * r;
    }
    fit.residual = std::sqrt(ssr / n);
    return fit;
}

std::pair<double, double> predicted_exponents(int r, std::size_t d) {
    if (r < 1) throw ConfigError("predicted_exponents: smoothness order r must be >= 1");
    if (d < 2) throw ConfigError("predicted_exponents: dimension d must be >= 2");
    return {-static_cast<double>(r) / static_cast<double>(d), -static_cast<double>(r) / 2.0};
}

std::uint64_t vc_bounds(VcKind kind, std::uint64_t d, std::uint64_t n_or_units) {
    if (d < 1 || n_or_units < 1) throw ConfigError("vc_bounds: arguments must be positive");
    if (kind == VcKind::shallow) return (d + 2) * n_or_units * n_or_units;
    return 4 * n_or_units * n_or_units * (d - 1) * (d - 1);
}

ScalingRun ScalingRun::assemble(std::vector<ScalingPoint> points, ScalingPrediction prediction,
                                std::string smoothness_note) {
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        if (!(points[i].complexity < points[i + 1].complexity))
            throw ConfigError("ScalingRun: complexities must be strictly increasing");
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(points.size());
    for (const auto& p : points) pairs.emplace_back(p.complexity, p.error);
    ScalingRun run;
    run.fit = fit_scaling_exponent(pairs);
    run.points = std::move(points);
    run.prediction = prediction;
    run.smoothness_note = std::move(smoothness_note);
    return run;
}

void ScalingRun::write_csv(std::ostream& os) const {
    CsvWriter csv(os, "scaling");
    csv.row({"n", "error", "surrogate", "seed", "predicted_exponent", "fitted_slope"});
    for (const auto& p : points)
        csv.row({CsvWriter::num(p.complexity), CsvWriter::num(p.error), p.surrogate,
                 CsvWriter::num(p.seed), CsvWriter::num(prediction.predicted_exponent()),
                 CsvWriter::num(fit.slope)});
}

CompositionScaling composition_lipschitz_test(const BivariateFn& h, const BivariateFn& h1,
                                              const BivariateFn& h2,
                                              const std::vector<double>& eps_list,
                                              const BivariateFn& perturb1,
                                              const BivariateFn& perturb2,
                                              std::size_t resolution) {
    if (eps_list.empty()) throw ConfigError("composition_lipschitz_test: empty epsilon list");
    BivariateFn phi1 = perturb1 ? perturb1 : [](double a, double b) { return std::sin(2 * a + b); };
    BivariateFn phi2 = perturb2 ? perturb2
                                : [](double a, double b) { return std::cos(a - 2 * b + 0.5); };
    // normalize each perturbation to unit sup over [-1,1]^2
    auto unit_sup = [](const BivariateFn& phi) {
        double sup = 0;
        const std::size_t n = 101;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double a = -1.0 + 2.0 * i / (n - 1);
                double b = -1.0 + 2.0 * j / (n - 1);
                sup = std::max(sup, std::abs(phi(a, b)));
            }
        if (sup == 0)
            throw ConfigError("composition_lipschitz_test: perturbation is identically zero");
        return sup;
    };
    const double s1 = unit_sup(phi1), s2 = unit_sup(phi2);

    auto pts = quasirandom_points(Box::cube(4, -1.0, 1.0), resolution, 4);
    CompositionScaling out;
    std::vector<std::pair<double, double>> positive;
    for (double eps : eps_list) {
        if (eps < 0) throw ConfigError("composition_lipschitz_test: epsilon must be >= 0");
        double sup = 0;
        for (const auto& x : pts) {
            double u = h1(x[0], x[1]);
            double v = h2(x[2], x[3]);
            double up = u + eps * phi1(x[0], x[1]) / s1;
            double vp = v + eps * phi2(x[2], x[3]) / s2;
            sup = std::max(sup, std::abs(h(u, v) - h(up, vp)));
        }
        out.table.emplace_back(eps, sup);
        if (eps > 0 && sup > 0) positive.emplace_back(eps, sup);
    }
    if (positive.size() >= 3) {
        out.slope = fit_scaling_exponent(positive).slope;
    } else if (positive.size() == 2) {
        out.slope = std::log(positive[1].second / positive[0].second) /
                    std::log(positive[1].first / positive[0].first);
    } else {
        out.slope = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

} // namespace compo
