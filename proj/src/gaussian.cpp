#include "compo/gaussian.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace compo {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double brute_min_sq(const std::vector<std::vector<double>>& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double d = sq_dist(pts[i], pts[j]);
            if (d < best) best = d;
        }
    return best;
}

struct CellKey {
    std::vector<std::int64_t> c;
    bool operator==(const CellKey& o) const { return c == o.c; }
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const {
        std::size_t h = 1469598103934665603ull;
        for (auto v : k.c) {
            h ^= static_cast<std::size_t>(v);
            h *= 1099511628211ull;
        }
        return h;
    }
};

double bucket_min_sq(const std::vector<std::vector<double>>& pts) {
    const std::size_t d = pts.front().size();
    // Any adjacent pair in input order bounds the separation from above;
    // bucket width = that bound so true nearest pairs land in neighbor cells.
    double ub = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        ub = std::min(ub, sq_dist(pts[i], pts[i + 1]));
    if (ub == 0) return 0;
    double h = std::sqrt(ub);
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells;
    cells.reserve(pts.size());
    auto key_of = [&](const std::vector<double>& p) {
        CellKey k;
        k.c.resize(d);
        for (std::size_t i = 0; i < d; ++i) k.c[i] = static_cast<std::int64_t>(std::floor(p[i] / h));
        return k;
    };
    for (std::size_t i = 0; i < pts.size(); ++i) cells[key_of(pts[i])].push_back(i);
    double best = ub;
    std::vector<std::int64_t> off(d, -1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CellKey base = key_of(pts[i]);
        std::fill(off.begin(), off.end(), -1);
        while (true) {
            CellKey k = base;
            for (std::size_t j = 0; j < d; ++j) k.c[j] += off[j];
            auto it = cells.find(k);
            if (it != cells.end())
                for (std::size_t j : it->second)
                    if (j > i) best = std::min(best, sq_dist(pts[i], pts[j]));
            std::size_t j = 0;
            for (; j < d; ++j) {
                if (++off[j] <= 1) break;
                off[j] = -1;
            }
            if (j == d) break;
        }
    }
    return best;
}

} // namespace

double minimal_separation(const std::vector<std::vector<double>>& points) {
    if (points.size() < 2) throw ConfigError("minimal_separation: need at least 2 points");
    const std::size_t d = points.front().size();
    for (const auto& p : points)
        if (p.size() != d) throw ConfigError("minimal_separation: inconsistent point dimensions");
    double best = points.size() < 4096 ? brute_min_sq(points) : bucket_min_sq(points);
    if (best == 0)
        throw NumericError("minimal_separation: duplicate points (separation 0 violates the "
                           "center-set invariant)");
    return std::sqrt(best);
}

CenterSet::CenterSet(std::vector<std::vector<double>> points)
    : points_(std::move(points)), separation_(minimal_separation(points_)) {}

CenterSet::CenterSet(std::vector<std::vector<double>> points, double separation,
                     std::optional<GridSpec> spec)
    : points_(std::move(points)), separation_(separation), spec_(spec) {
    if (!(separation_ > 0)) throw NumericError("CenterSet: separation must be positive");
}

namespace {

std::vector<std::vector<double>> grid_product(std::int64_t jmax, double m, std::size_t dim,
                                              std::size_t max_points) {
    const std::size_t per_dim = static_cast<std::size_t>(2 * jmax + 1);
    double total_d = 1;
    for (std::size_t i = 0; i < dim; ++i) total_d *= static_cast<double>(per_dim);
    if (total_d > static_cast<double>(max_points)) {
        std::ostringstream os;
        os << "grid would hold " << total_d << " points, exceeding the cap of " << max_points;
        throw NumericError(os.str());
    }
    std::vector<double> axis(per_dim);
    for (std::int64_t j = -jmax; j <= jmax; ++j)
        axis[static_cast<std::size_t>(j + jmax)] = static_cast<double>(j) / m;
    const auto total = static_cast<std::size_t>(total_d);
    std::vector<std::vector<double>> pts;
    pts.reserve(total);
    std::vector<std::size_t> idx(dim, 0);
    std::vector<double> x(dim);
    for (std::size_t count = 0; count < total; ++count) {
        for (std::size_t i = 0; i < dim; ++i) x[i] = axis[idx[i]];
        pts.push_back(x);
        for (std::size_t i = dim; i-- > 0;) {
            if (++idx[i] < per_dim) break;
            idx[i] = 0;
        }
    }
    return pts;
}

} // namespace

CenterSet grid_centers(std::size_t m, std::size_t dim, double c, std::size_t max_points) {
    if (m < 1) throw ConfigError("grid_centers: m must be >= 1");
    if (dim < 1) throw ConfigError("grid_centers: dimension must be >= 1");
    if (!(c > 0)) throw ConfigError("grid_centers: c must be positive");
    const auto jmax = static_cast<std::int64_t>(std::floor(c * static_cast<double>(m) * m));
    if (jmax < 1)
        throw ConfigError("grid_centers: c*m^2 < 1 yields a single point per axis; enlarge c or m");
    auto pts = grid_product(jmax, static_cast<double>(m), dim, max_points);
    return CenterSet(std::move(pts), 1.0 / static_cast<double>(m), GridSpec{m, c});
}

GaussianNet::GaussianNet(CenterSet centers, std::vector<double> coeffs)
    : centers_(std::move(centers)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != centers_.size())
        throw ConfigError("GaussianNet: coefficient count must equal center count");
}

double GaussianNet::eval(std::span<const double> x) const {
    if (x.size() != centers_.dim()) throw ConfigError("GaussianNet: input dimension mismatch");
    double s = 0;
    const auto& pts = centers_.points();
    for (std::size_t k = 0; k < pts.size(); ++k) s += coeffs_[k] * std::exp(-sq_dist(x, pts[k]));
    return s;
}

GaussianNet fit_gaussian_coeffs(const CenterSet& centers,
                                const std::vector<std::vector<double>>& sample_xs,
                                const std::vector<double>& sample_ys, double lambda) {
    const std::size_t n = centers.size();
    const std::size_t s = sample_xs.size();
    if (lambda < 0) throw ConfigError("fit_gaussian_coeffs: lambda must be >= 0");
    if (sample_ys.size() != s) throw ConfigError("fit_gaussian_coeffs: xs/ys length mismatch");
    if (s < n)
        throw ConfigError("fit_gaussian_coeffs: need at least as many samples as centers (" +
                          std::to_string(s) + " < " + std::to_string(n) + ")");
    for (const auto& x : sample_xs)
        if (x.size() != centers.dim())
            throw ConfigError("fit_gaussian_coeffs: sample/center dimension mismatch");

    // Normal equations accumulated sample by sample; no shared workspace.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd phi(n);
    const auto& pts = centers.points();
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t k = 0; k < n; ++k) phi[k] = std::exp(-sq_dist(sample_xs[i], pts[k]));
        A.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0);
        rhs += sample_ys[i] * phi;
    }
    for (std::size_t k = 0; k < n; ++k) A(k, k) += lambda;

    // LLT/LDLT read only the lower triangle, which the rank updates filled
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    Eigen::VectorXd a;
    if (llt.info() == Eigen::Success) {
        a = llt.solve(rhs);
    } else {
        if (lambda == 0)
            throw NumericError("fit_gaussian_coeffs: normal equations are numerically singular; "
                               "rerun with lambda > 0");
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() != Eigen::Success)
            throw NumericError("fit_gaussian_coeffs: symmetric factorization failed");
        a = ldlt.solve(rhs);
    }
    if (!a.allFinite())
        throw NumericError("fit_gaussian_coeffs: non-finite coefficients; increase lambda");
    return GaussianNet(centers, std::vector<double>(a.data(), a.data() + n));
}

std::vector<std::vector<double>> default_fit_samples(const CenterSet& centers,
                                                     std::size_t max_points) {
    if (centers.grid_spec()) {
        const auto& gs = *centers.grid_spec();
        // aligned 3x grid: spacing 1/(3m) over the same box, contains the centers
        const auto jmax =
            static_cast<std::int64_t>(std::floor(gs.c * static_cast<double>(gs.m) * gs.m));
        return grid_product(3 * jmax, 3.0 * static_cast<double>(gs.m), centers.dim(), max_points);
    }
    // generic sets: centers plus a bounding-box grid at spacing separation/3
    const std::size_t d = centers.dim();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& p : centers.points())
        for (std::size_t i = 0; i < d; ++i) {
            lo[i] = std::min(lo[i], p[i]);
            hi[i] = std::max(hi[i], p[i]);
        }
    double spacing = centers.separation() / 3.0;
    std::size_t per_dim = 2;
    for (std::size_t i = 0; i < d; ++i) {
        double span = hi[i] - lo[i];
        per_dim = std::max(per_dim, static_cast<std::size_t>(std::ceil(span / spacing)) + 1);
    }
    double total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= static_cast<double>(per_dim);
    while (total > static_cast<double>(max_points) && per_dim > 2) {
        --per_dim;
        total = 1;
        for (std::size_t i = 0; i < d; ++i) total *= static_cast<double>(per_dim);
    }
    bool degenerate = false;
    for (std::size_t i = 0; i < d; ++i)
        if (!(lo[i] < hi[i])) degenerate = true;
    auto samples = centers.points();
    if (!degenerate) {
        auto g = grid_points(Box(lo, hi), per_dim);
        samples.insert(samples.end(), g.begin(), g.end());
    }
    return samples;
}

GaussianNet fit_gaussian_to_target(const ScalarTarget& target, const CenterSet& centers,
                                   double lambda) {
    if (target.arity != centers.dim())
        throw ConfigError("fit_gaussian_to_target: target/center dimension mismatch");
    auto xs = default_fit_samples(centers);
    std::vector<double> ys;
    ys.reserve(xs.size());
    for (const auto& x : xs) ys.push_back(target.fn(x));
    return fit_gaussian_coeffs(centers, xs, ys, lambda);
}

TreeGaussianNet::TreeGaussianNet(TreeTopology topo, std::vector<GaussianNet> nodes)
    : topo_(topo), nodes_(std::move(nodes)) {
    if (nodes_.size() != topo_.internal_count())
        throw ConfigError("TreeGaussianNet: expected one node network per internal vertex");
    for (const auto& n : nodes_)
        if (n.centers().dim() != 2)
            throw ConfigError("TreeGaussianNet: node networks must live on R^2");
}

const GaussianNet& TreeGaussianNet::node(std::size_t vertex) const {
    if (!topo_.valid_internal(vertex))
        throw ConfigError("TreeGaussianNet: no internal vertex " + std::to_string(vertex));
    return nodes_[vertex - 1];
}

std::vector<double> TreeGaussianNet::eval_nodes(std::span<const double> x) const {
    if (x.size() != topo_.leaves) throw ConfigError("TreeGaussianNet: input dimension mismatch");
    const std::size_t d = topo_.leaves;
    std::vector<double> val(2 * d);
    for (std::size_t i = 0; i < d; ++i) val[d + i] = x[i];
    for (std::size_t v = d; v-- > 1;) {
        double in[2] = {val[2 * v], val[2 * v + 1]};
        val[v] = nodes_[v - 1].eval(std::span<const double>(in, 2));
    }
    return {val.begin() + 1, val.begin() + static_cast<std::ptrdiff_t>(d)};
}

double TreeGaussianNet::eval(std::span<const double> x) const { return eval_nodes(x)[0]; }

TreeGaussianNet fit_tree_gaussian(const CompositionalTarget& target,
                                  const std::vector<CenterSet>& node_centers, double lambda) {
    const auto& topo = target.topology();
    if (node_centers.size() != topo.internal_count())
        throw ConfigError("fit_tree_gaussian: need one center set per internal vertex (" +
                          std::to_string(topo.internal_count()) + "), got " +
                          std::to_string(node_centers.size()));
    std::vector<GaussianNet> nodes;
    nodes.reserve(node_centers.size());
    for (std::size_t v = 1; v < topo.leaves; ++v) {
        const auto& fv = target.node_fn(v); // throws if the oracle is missing
        const auto& centers = node_centers[v - 1];
        if (centers.dim() != 2)
            throw ConfigError("fit_tree_gaussian: centers for vertex " + std::to_string(v) +
                              " must live on R^2");
        auto xs = default_fit_samples(centers);
        std::vector<double> ys;
        ys.reserve(xs.size());
        for (const auto& x : xs) ys.push_back(fv(x[0], x[1]));
        nodes.push_back(fit_gaussian_coeffs(centers, xs, ys, lambda));
    }
    return TreeGaussianNet(topo, std::move(nodes));
}

Box gaussian_norm_window(const CenterSet& centers) {
    const std::size_t d = centers.dim();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& p : centers.points())
        for (std::size_t i = 0; i < d; ++i) {
            lo[i] = std::min(lo[i], p[i]);
            hi[i] = std::max(hi[i], p[i]);
        }
    for (std::size_t i = 0; i < d; ++i) {
        lo[i] -= 3.0;
        hi[i] += 3.0;
    }
    return Box(lo, hi);
}

double gaussian_sup_error(const VectorFn& f, const GaussianNet& g) {
    const auto& centers = g.centers();
    const std::size_t d = centers.dim();
    Box window = gaussian_norm_window(centers);
    double m_eff = centers.grid_spec() ? static_cast<double>(centers.grid_spec()->m)
                                       : 1.0 / centers.separation();
    double sup = 0;
    if (d <= 2) {
        double spacing = std::min(0.05, 1.0 / (4.0 * m_eff));
        std::size_t per_dim = 2;
        for (std::size_t i = 0; i < d; ++i)
            per_dim = std::max(per_dim,
                               static_cast<std::size_t>(
                                   std::ceil((window.hi[i] - window.lo[i]) / spacing)) +
                                   1);
        for (const auto& x : grid_points(window, per_dim))
            sup = std::max(sup, std::abs(f(x) - g.eval(x)));
    } else {
        for (const auto& x : quasirandom_points(window, 100000, 9001))
            sup = std::max(sup, std::abs(f(x) - g.eval(x)));
    }
    return sup;
}

} // namespace compo
