#include "compo/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <vector>

namespace compo {

std::string to_hexfloat(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double from_hexfloat(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ConfigError("serialize: cannot parse float '" + s + "'");
    return v;
}

namespace {

std::map<std::string, std::string> parse_header(const std::string& line, std::string& kind) {
    std::istringstream is(line);
    std::string tag;
    is >> tag >> kind;
    if (tag != "compo-net") throw ConfigError("serialize: bad header '" + line + "'");
    std::map<std::string, std::string> kv;
    std::string tok;
    while (is >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw ConfigError("serialize: bad header token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

double read_value(std::istream& is, const char* what) {
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) return from_hexfloat(line);
    throw ConfigError(std::string("serialize: truncated stream while reading ") + what);
}

void write_params(const std::vector<double>& p, std::ostream& os) {
    for (double v : p) os << to_hexfloat(v) << "\n";
}

std::size_t to_count(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("serialize: missing header field '" + key + "'");
    return static_cast<std::size_t>(std::stoull(it->second));
}

} // namespace

void save_net(const Net& net, std::ostream& os) {
    if (const auto* s = dynamic_cast<const ShallowNet*>(&net)) {
        os << "compo-net shallow d=" << s->input_dim() << " n=" << s->units()
           << " delta=" << to_hexfloat(s->activation().delta) << "\n";
        write_params(s->params(), os);
        return;
    }
    if (const auto* t = dynamic_cast<const DeepTreeNet*>(&net)) {
        os << "compo-net tree d=" << t->input_dim() << " n=" << t->channels()
           << " delta=" << to_hexfloat(t->node(1).activation().delta) << "\n";
        write_params(t->params(), os);
        return;
    }
    if (const auto* m = dynamic_cast<const GenericMLP*>(&net)) {
        os << "compo-net mlp dims=";
        for (std::size_t i = 0; i < m->dims().size(); ++i) os << (i ? "," : "") << m->dims()[i];
        os << " batchnorm=" << (m->batchnorm() ? 1 : 0)
           << " delta=" << to_hexfloat(m->activation().delta) << "\n";
        write_params(m->params(), os);
        for (std::size_t i = 0; i < m->bn_count(); ++i) {
            write_params(m->bn(i).run_mean, os);
            write_params(m->bn(i).run_var, os);
        }
        return;
    }
    throw ConfigError("save_net: unknown network kind '" + net.kind() + "'");
}

std::unique_ptr<Net> load_net(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("load_net: empty stream");
    std::string kind;
    auto kv = parse_header(line, kind);
    double delta = from_hexfloat(kv.at("delta"));
    SmoothActivation act(delta);
    if (kind == "shallow" || kind == "tree") {
        std::size_t d = to_count(kv, "d");
        std::size_t n = to_count(kv, "n");
        std::unique_ptr<Net> net;
        if (kind == "shallow")
            net = std::make_unique<ShallowNet>(d, n, act);
        else
            net = std::make_unique<DeepTreeNet>(TreeTopology(d), n, act);
        std::vector<double> p(net->param_count());
        for (double& v : p) v = read_value(is, kind.c_str());
        net->set_params(p);
        return net;
    }
    if (kind == "mlp") {
        std::vector<std::size_t> dims;
        std::istringstream ds(kv.at("dims"));
        std::string tok;
        while (std::getline(ds, tok, ',')) dims.push_back(std::stoull(tok));
        bool bn = kv.at("batchnorm") == "1";
        auto net = std::make_unique<GenericMLP>(dims, bn, act);
        std::vector<double> p(net->param_count());
        for (double& v : p) v = read_value(is, "mlp");
        net->set_params(p);
        for (std::size_t i = 0; i < net->bn_count(); ++i) {
            for (double& v : net->bn(i).run_mean) v = read_value(is, "bn running mean");
            for (double& v : net->bn(i).run_var) v = read_value(is, "bn running var");
        }
        return net;
    }
    throw ConfigError("load_net: unknown kind '" + kind + "'");
}

void save_gaussian(const GaussianNet& net, std::ostream& os) {
    const auto& c = net.centers();
    os << "compo-net gaussian d=" << c.dim() << " n=" << c.size()
       << " separation=" << to_hexfloat(c.separation());
    if (c.grid_spec())
        os << " grid_m=" << c.grid_spec()->m << " grid_c=" << to_hexfloat(c.grid_spec()->c);
    os << "\n";
    for (const auto& p : c.points())
        for (double v : p) os << to_hexfloat(v) << "\n";
    write_params(net.coeffs(), os);
}

GaussianNet load_gaussian(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("load_gaussian: empty stream");
    std::string kind;
    auto kv = parse_header(line, kind);
    if (kind != "gaussian") throw ConfigError("load_gaussian: expected gaussian, got " + kind);
    std::size_t d = to_count(kv, "d");
    std::size_t n = to_count(kv, "n");
    double sep = from_hexfloat(kv.at("separation"));
    std::optional<GridSpec> spec;
    if (kv.count("grid_m"))
        spec = GridSpec{to_count(kv, "grid_m"), from_hexfloat(kv.at("grid_c"))};
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    for (auto& p : pts)
        for (double& v : p) v = read_value(is, "gaussian center");
    std::vector<double> coeffs(n);
    for (double& v : coeffs) v = read_value(is, "gaussian coefficient");
    return GaussianNet(CenterSet(std::move(pts), sep, spec), std::move(coeffs));
}

} // namespace compo
