#include "thomaslab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "thomaslab/rng.hpp"

namespace tlab {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

namespace {

std::string join(const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) throw ConfigError(join(path, item.key()), "unknown key");
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& need(const json& obj, const std::string& path, const std::string& key) {
    const json* p = find(obj, key);
    if (!p) throw ConfigError(join(path, key), "missing required key");
    return *p;
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

long as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<long>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

double opt_double(const json& obj, const std::string& path, const std::string& key, double dflt) {
    const json* p = find(obj, key);
    return p ? as_double(*p, join(path, key)) : dflt;
}

long opt_integer(const json& obj, const std::string& path, const std::string& key, long dflt) {
    const json* p = find(obj, key);
    return p ? as_integer(*p, join(path, key)) : dflt;
}

bool opt_bool(const json& obj, const std::string& path, const std::string& key, bool dflt) {
    const json* p = find(obj, key);
    return p ? as_bool(*p, join(path, key)) : dflt;
}

Eigen::MatrixXd as_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) throw ConfigError(path, "expected rows of numbers");
    Eigen::MatrixXd out(v.size(), cols);
    for (std::size_t r = 0; r < v.size(); ++r) {
        if (!v[r].is_array() || v[r].size() != cols)
            throw ConfigError(path, "rows must all have the same length");
        for (std::size_t c = 0; c < cols; ++c)
            out(r, c) = as_double(v[r][c], path + "[" + std::to_string(r) + "]");
    }
    return out;
}

Eigen::VectorXd as_vector(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = as_double(v[i], path + "[" + std::to_string(i) + "]");
    return out;
}

// "inf" / "infinity" or a number >= 2.
double as_exponent_q(const json& v, const std::string& path) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
        throw ConfigError(path, "expected a number or \"inf\"");
    }
    return as_double(v, path);
}

// Either {"values": [...]} or {"min","max","count"} with optional
// "scale": "log" (default) or "linear". Result strictly increasing.
std::vector<double> parse_grid(const json& obj, const std::string& path) {
    check_keys(obj, path, {"values", "min", "max", "count", "scale"});
    std::vector<double> out;
    if (const json* vals = find(obj, "values")) {
        if (find(obj, "min") || find(obj, "max") || find(obj, "count"))
            throw ConfigError(path, "give either values or min/max/count, not both");
        const Eigen::VectorXd v = as_vector(*vals, join(path, "values"));
        out.assign(v.data(), v.data() + v.size());
    } else {
        const double lo = as_double(need(obj, path, "min"), join(path, "min"));
        const double hi = as_double(need(obj, path, "max"), join(path, "max"));
        const long count = as_integer(need(obj, path, "count"), join(path, "count"));
        std::string scale = "log";
        if (const json* s = find(obj, "scale")) scale = as_string(*s, join(path, "scale"));
        if (scale != "log" && scale != "linear")
            throw ConfigError(join(path, "scale"), "expected \"log\" or \"linear\"");
        if (count < 1) throw ConfigError(join(path, "count"), "need at least one point");
        if (count > 1 && !(hi > lo)) throw ConfigError(path, "max must exceed min");
        if (scale == "log" && !(lo > 0)) throw ConfigError(join(path, "min"), "log grid needs min > 0");
        for (long i = 0; i < count; ++i) {
            const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            out.push_back(scale == "log" ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                                         : lo + t * (hi - lo));
        }
        out.front() = lo; // pin the endpoints against log/exp rounding
        if (count > 1) out.back() = hi;
    }
    for (std::size_t i = 0; i + 1 < out.size(); ++i)
        if (!(out[i] < out[i + 1])) throw ConfigError(path, "grid must be strictly increasing");
    if (out.empty()) throw ConfigError(path, "empty grid");
    return out;
}

Eigen::VectorXd parse_xi_perp(const json& obj, const std::string& path,
                              const std::optional<Lattice>& lat) {
    const int m = lat ? lat->dim() : 0;
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(m);
    if (const json* p = find(obj, "xi_perp")) {
        if (!lat) throw ConfigError(join(path, "xi_perp"), "xi_perp needs a lattice");
        xi = as_vector(*p, join(path, "xi_perp"));
        if (xi.size() != m)
            throw ConfigError(join(path, "xi_perp"), "expected " + std::to_string(m) + " entries");
        if (std::abs(xi.dot(lat->b1())) > 1e-12 * (1.0 + xi.norm()))
            throw ConfigError(join(path, "xi_perp"), "must be orthogonal to the first period b1");
    }
    return xi;
}

CrossSectionSpec parse_cross_section(const json& obj, const std::string& path) {
    const std::string kind = as_string(need(obj, path, "kind"), join(path, "kind"));
    CrossSectionSpec spec;
    auto parse_bc = [&](bool required) {
        if (const json* p = find(obj, "bc")) {
            const std::string bc = as_string(*p, join(path, "bc"));
            if (bc == "dirichlet") spec.bc = Bc::Dirichlet;
            else if (bc == "neumann") spec.bc = Bc::Neumann;
            else throw ConfigError(join(path, "bc"), "expected \"dirichlet\" or \"neumann\"");
        } else if (required) {
            throw ConfigError(join(path, "bc"), "missing required key");
        }
    };
    if (kind == "circle") {
        check_keys(obj, path, {"kind", "length"});
        spec.kind = CrossSectionSpec::Kind::Circle;
        spec.length = as_double(need(obj, path, "length"), join(path, "length"));
    } else if (kind == "interval") {
        check_keys(obj, path, {"kind", "length", "bc"});
        spec.kind = CrossSectionSpec::Kind::Interval;
        spec.length = as_double(need(obj, path, "length"), join(path, "length"));
        parse_bc(true);
    } else if (kind == "flat_torus") {
        check_keys(obj, path, {"kind", "basis"});
        spec.kind = CrossSectionSpec::Kind::FlatTorus;
        spec.torus_basis = as_matrix(need(obj, path, "basis"), join(path, "basis"));
    } else if (kind == "interval_torus") {
        check_keys(obj, path, {"kind", "length", "bc", "basis"});
        spec.kind = CrossSectionSpec::Kind::IntervalTimesTorus;
        spec.length = as_double(need(obj, path, "length"), join(path, "length"));
        spec.torus_basis = as_matrix(need(obj, path, "basis"), join(path, "basis"));
        parse_bc(true);
    } else {
        throw ConfigError(join(path, "kind"),
                          "expected circle, interval, flat_torus or interval_torus");
    }
    if (spec.kind != CrossSectionSpec::Kind::FlatTorus && !(spec.length > 0))
        throw ConfigError(join(path, "length"), "must be positive");
    return spec;
}

PotentialSpec::Key parse_nu(const json& row, std::size_t from, std::size_t count,
                            const std::string& path) {
    PotentialSpec::Key nu(count);
    for (std::size_t i = 0; i < count; ++i)
        nu[i] = static_cast<int>(as_integer(row[from + i], path));
    return nu;
}

std::map<PotentialSpec::Key, std::complex<double>> parse_harmonic_rows(const json& arr, int m,
                                                                       const std::string& path) {
    if (!arr.is_array()) throw ConfigError(path, "expected an array of entries");
    std::map<PotentialSpec::Key, std::complex<double>> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string rp = path + "[" + std::to_string(i) + "]";
        const json& row = arr[i];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(m) + 2)
            throw ConfigError(rp, "expected [nu_1..nu_m, re, im]");
        const auto nu = parse_nu(row, 0, m, rp);
        out[nu] = {as_double(row[m], rp), as_double(row[m + 1], rp)};
    }
    return out;
}

// Text tuples: one entry per line, "#" starts a comment.
//   jp j nu_1 ... nu_m re im
std::map<PotentialSpec::PairKey, std::complex<double>> read_entries_file(const std::string& file,
                                                                         int m,
                                                                         const std::string& path) {
    std::ifstream in(file);
    if (!in) throw ConfigError(path, "cannot open " + file);
    std::map<PotentialSpec::PairKey, std::complex<double>> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        int jp, j;
        if (!(ss >> jp >> j))
            throw ConfigError(path, file + ":" + std::to_string(lineno) + ": bad entry");
        PotentialSpec::PairKey key;
        key.jp = jp;
        key.j = j;
        key.nu.resize(m);
        double re, im;
        for (int d = 0; d < m; ++d)
            if (!(ss >> key.nu[d]))
                throw ConfigError(path, file + ":" + std::to_string(lineno) + ": bad entry");
        if (!(ss >> re >> im))
            throw ConfigError(path, file + ":" + std::to_string(lineno) + ": bad entry");
        out[key] = {re, im};
    }
    return out;
}

// Sample file layout (whitespace separated, "#" comments):
//   thomaslab-samples 1
//   nx <rows>  k <cross-section dim>  yres <r_1> ... <r_m>
//   then nx lines "x_1 .. x_k w", then the keyword "samples", then nx lines
//   of prod(r) values each (last longitudinal dimension fastest).
struct SampleFile {
    QuadratureGrid xgrid;
    std::vector<int> yres;
    Eigen::MatrixXd samples;
};

SampleFile read_samples_file(const std::string& file, int m, const std::string& path) {
    std::ifstream raw(file);
    if (!raw) throw ConfigError(path, "cannot open " + file);
    std::stringstream in;
    for (std::string line; std::getline(raw, line);) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        in << line << '\n';
    }
    auto fail = [&](const std::string& why) -> std::runtime_error {
        return ConfigError(path, file + ": " + why);
    };
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "thomaslab-samples" || version != 1)
        throw fail("expected header \"thomaslab-samples 1\"");
    long nx = 0;
    int k = -1;
    std::vector<int> yres;
    while (in >> word) {
        if (word == "nx") {
            if (!(in >> nx) || nx < 1) throw fail("bad nx");
        } else if (word == "k") {
            if (!(in >> k) || k < 0) throw fail("bad k");
        } else if (word == "yres") {
            yres.resize(m);
            for (int d = 0; d < m; ++d)
                if (!(in >> yres[d]) || yres[d] < 1) throw fail("bad yres");
            break;
        } else {
            throw fail("unexpected token " + word);
        }
    }
    if (nx < 1 || k < 0 || yres.empty()) throw fail("incomplete header");
    SampleFile sf;
    sf.yres = yres;
    sf.xgrid.nodes.resize(nx, k);
    sf.xgrid.weights.resize(nx);
    for (long r = 0; r < nx; ++r) {
        for (int c = 0; c < k; ++c)
            if (!(in >> sf.xgrid.nodes(r, c))) throw fail("truncated x nodes");
        if (!(in >> sf.xgrid.weights[r])) throw fail("truncated x weights");
    }
    if (!(in >> word) || word != "samples") throw fail("expected the samples section");
    long ny = 1;
    for (int r : yres) ny *= r;
    sf.samples.resize(nx, ny);
    for (long r = 0; r < nx; ++r)
        for (long c = 0; c < ny; ++c)
            if (!(in >> sf.samples(r, c))) throw fail("truncated samples");
    return sf;
}

std::vector<int> parse_nucap(const json& obj, const std::string& path, int m) {
    const json& v = need(obj, path, "nucap");
    const std::string p = join(path, "nucap");
    if (!v.is_array() || v.size() != static_cast<std::size_t>(m))
        throw ConfigError(p, "expected " + std::to_string(m) + " integers");
    std::vector<int> out(m);
    for (int d = 0; d < m; ++d) out[d] = static_cast<int>(as_integer(v[d], p));
    return out;
}

PotentialSpec parse_potential(const json& obj, const std::string& path, const Lattice& lat,
                              const CrossSectionSpec& cs_spec) {
    const std::string kind = as_string(need(obj, path, "kind"), join(path, "kind"));
    const int m = lat.dim();
    if (kind == "none") {
        check_keys(obj, path, {"kind"});
        return PotentialSpec::zero(lat);
    }
    if (kind == "mathieu") {
        check_keys(obj, path, {"kind"});
        if (m != 1) throw ConfigError(path, "the two-harmonic cosine needs one period direction");
        std::map<PotentialSpec::Key, std::complex<double>> h;
        h[{1}] = 1.0;
        h[{-1}] = 1.0;
        return PotentialSpec::from_harmonics(lat, h);
    }
    if (kind == "harmonics") {
        check_keys(obj, path, {"kind", "entries"});
        const auto h = parse_harmonic_rows(need(obj, path, "entries"), m, join(path, "entries"));
        try {
            return PotentialSpec::from_harmonics(lat, h);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(join(path, "entries"), e.what());
        }
    }
    if (kind == "entries_file") {
        check_keys(obj, path, {"kind", "path", "jcap"});
        const std::string file = as_string(need(obj, path, "path"), join(path, "path"));
        const long jcap = as_integer(need(obj, path, "jcap"), join(path, "jcap"));
        const auto entries = read_entries_file(file, m, join(path, "path"));
        try {
            return PotentialSpec::from_entries(lat, static_cast<int>(jcap), entries);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path, e.what());
        }
    }
    if (kind == "samples_file") {
        check_keys(obj, path, {"kind", "path", "jcap", "nucap"});
        const std::string file = as_string(need(obj, path, "path"), join(path, "path"));
        const long jcap = as_integer(need(obj, path, "jcap"), join(path, "jcap"));
        const auto nucap = parse_nucap(obj, path, m);
        const SampleFile sf = read_samples_file(file, m, join(path, "path"));
        const auto cs = CrossSection::first(cs_spec, static_cast<int>(jcap));
        try {
            return project_samples(lat, cs, sf.xgrid, sf.yres, sf.samples,
                                   static_cast<int>(jcap), nucap);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path, e.what());
        }
    }
    throw ConfigError(join(path, "kind"),
                      "expected none, mathieu, harmonics, entries_file or samples_file");
}

BoundarySigma parse_sigma(const json& obj, const std::string& path, const Lattice& lat) {
    check_keys(obj, path, {"face0", "face_a"});
    const int m = lat.dim();
    std::map<PotentialSpec::Key, std::complex<double>> f0, fa;
    if (const json* p = find(obj, "face0")) f0 = parse_harmonic_rows(*p, m, join(path, "face0"));
    if (const json* p = find(obj, "face_a")) fa = parse_harmonic_rows(*p, m, join(path, "face_a"));
    try {
        return BoundarySigma(m, f0, fa);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
}

Regime parse_regime(const json& v, const std::string& path) {
    const std::string s = as_string(v, path);
    if (s == "no-boundary") return Regime::NoBoundary;
    if (s == "product-interval") return Regime::ProductInterval;
    if (s == "boundary-high-q") return Regime::BoundaryHighQ;
    if (s == "boundary-low-q") return Regime::BoundaryLowQ;
    throw ConfigError(path, "expected no-boundary, product-interval, boundary-high-q or "
                            "boundary-low-q");
}

TaskSpec parse_task(const json& obj, const std::string& path, const std::string& name,
                    const std::optional<Lattice>& lat) {
    if (name == "bands") {
        check_keys(obj, path, {"name", "bands", "grid", "xi_perp", "flat_threshold",
                               "min_variation"});
        BandsTask t;
        t.bands = static_cast<int>(opt_integer(obj, path, "bands", t.bands));
        t.grid = static_cast<int>(opt_integer(obj, path, "grid", t.grid));
        t.flat_threshold = opt_double(obj, path, "flat_threshold", t.flat_threshold);
        t.min_variation = opt_double(obj, path, "min_variation", t.min_variation);
        t.xi_perp = parse_xi_perp(obj, path, lat);
        if (t.bands < 1) throw ConfigError(join(path, "bands"), "need at least one band");
        if (t.grid < 2) throw ConfigError(join(path, "grid"), "need at least two grid points");
        return t;
    }
    if (name == "thomas") {
        check_keys(obj, path, {"name", "lambda_re", "lambda_im", "xi_perp", "tau",
                               "tau_min_fit", "max_slope", "require_finite"});
        ThomasTask t;
        t.lambda = {opt_double(obj, path, "lambda_re", 0), opt_double(obj, path, "lambda_im", 0)};
        t.taus = parse_grid(need(obj, path, "tau"), join(path, "tau"));
        t.tau_min_fit = opt_double(obj, path, "tau_min_fit", 0);
        t.max_slope = opt_double(obj, path, "max_slope", t.max_slope);
        t.require_finite = opt_bool(obj, path, "require_finite", false);
        t.xi_perp = parse_xi_perp(obj, path, lat);
        return t;
    }
    if (name == "clusters") {
        check_keys(obj, path, {"name", "spectrum", "q", "k_min", "k_max", "xi_perp", "starts",
                               "max_iter", "tol", "sup_res", "regime", "slope_min", "slope_max"});
        ClustersTask t;
        if (const json* p = find(obj, "spectrum")) {
            t.spectrum = as_string(*p, join(path, "spectrum"));
            if (t.spectrum != "cross-section" && t.spectrum != "fiber")
                throw ConfigError(join(path, "spectrum"), "expected cross-section or fiber");
        }
        t.q = as_exponent_q(need(obj, path, "q"), join(path, "q"));
        if (!(t.q >= 2)) throw ConfigError(join(path, "q"), "need q >= 2");
        t.k_min = static_cast<int>(opt_integer(obj, path, "k_min", t.k_min));
        t.k_max = static_cast<int>(opt_integer(obj, path, "k_max", t.k_max));
        if (t.k_min < 1 || t.k_max < t.k_min)
            throw ConfigError(path, "need 1 <= k_min <= k_max");
        t.xi_perp = parse_xi_perp(obj, path, lat);
        t.norm.starts = static_cast<int>(opt_integer(obj, path, "starts", t.norm.starts));
        t.norm.max_iter = static_cast<int>(opt_integer(obj, path, "max_iter", t.norm.max_iter));
        t.norm.tol = opt_double(obj, path, "tol", t.norm.tol);
        t.norm.sup_res = static_cast<int>(opt_integer(obj, path, "sup_res", t.norm.sup_res));
        if (const json* p = find(obj, "regime")) t.regime = parse_regime(*p, join(path, "regime"));
        t.slope_min = opt_double(obj, path, "slope_min", t.slope_min);
        t.slope_max = opt_double(obj, path, "slope_max", t.slope_max);
        return t;
    }
    if (name == "lemma-sums") {
        check_keys(obj, path, {"name", "eps", "tau", "weighted", "k_max", "xi_perp",
                               "assert_uniform"});
        LemmaSumsTask t;
        t.eps = as_double(need(obj, path, "eps"), join(path, "eps"));
        t.taus = parse_grid(need(obj, path, "tau"), join(path, "tau"));
        t.weighted = opt_bool(obj, path, "weighted", false);
        t.k_max = static_cast<int>(opt_integer(obj, path, "k_max", 0));
        t.xi_perp = parse_xi_perp(obj, path, lat);
        t.assert_uniform = opt_bool(obj, path, "assert_uniform", false);
        return t;
    }
    if (name == "robin-trace") {
        check_keys(obj, path, {"name", "tau", "quad_nodes", "xi_perp", "assert_halving"});
        RobinTask t;
        t.taus = parse_grid(need(obj, path, "tau"), join(path, "tau"));
        t.quad_nodes = static_cast<int>(opt_integer(obj, path, "quad_nodes", t.quad_nodes));
        t.xi_perp = parse_xi_perp(obj, path, lat);
        t.assert_halving = opt_bool(obj, path, "assert_halving", false);
        return t;
    }
    if (name == "probe") {
        check_keys(obj, path, {"name", "tau", "count", "delta", "xi_perp", "assert_lower"});
        ProbeTask t;
        t.tau = opt_double(obj, path, "tau", t.tau);
        t.count = static_cast<int>(opt_integer(obj, path, "count", t.count));
        t.delta = opt_double(obj, path, "delta", t.delta);
        t.xi_perp = parse_xi_perp(obj, path, lat);
        t.assert_lower = opt_bool(obj, path, "assert_lower", true);
        if (t.tau == 0) throw ConfigError(join(path, "tau"), "the probe needs tau != 0");
        if (t.count < 1) throw ConfigError(join(path, "count"), "need at least one probe");
        return t;
    }
    throw ConfigError(join(path, "name"),
                      "expected bands, thomas, clusters, lemma-sums, robin-trace or probe");
}

} // namespace

std::shared_ptr<const CrossSection> RunConfig::make_cross_section(double mu_cap) const {
    return std::make_shared<CrossSection>(CrossSection::up_to(cs_spec, mu_cap));
}

FiberModel RunConfig::make_model(double mu_cap) const {
    if (!lattice)
        throw ConfigError("model.lattice", "this task needs longitudinal directions");
    FiberModel model{*lattice, make_cross_section(mu_cap),
                     potential ? *potential : PotentialSpec::zero(*lattice), sigma};
    return model;
}

RunConfig parse_config(const json& j) {
    RunConfig cfg;
    cfg.raw = j;
    const std::string dump = j.dump();
    cfg.content_hash = fnv1a64(dump.data(), dump.size());

    check_keys(j, "", {"model", "task", "numeric"});
    const json& model = need(j, "", "model");
    check_keys(model, "model", {"lattice", "cross_section", "potential", "sigma", "declared_p"});
    cfg.cs_spec = parse_cross_section(need(model, "model", "cross_section"),
                                      "model.cross_section");
    if (const json* p = find(model, "lattice")) {
        const Eigen::MatrixXd basis = as_matrix(*p, "model.lattice");
        if (basis.rows() != basis.cols())
            throw ConfigError("model.lattice", "expected a square matrix of period rows");
        try {
            cfg.lattice.emplace(basis);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("model.lattice", e.what());
        }
    }
    if (const json* p = find(model, "potential")) {
        if (!cfg.lattice) throw ConfigError("model.potential", "a potential needs a lattice");
        cfg.potential = parse_potential(*p, "model.potential", *cfg.lattice, cfg.cs_spec);
    }
    if (const json* p = find(model, "sigma")) {
        if (!cfg.lattice) throw ConfigError("model.sigma", "a boundary weight needs a lattice");
        cfg.sigma = parse_sigma(*p, "model.sigma", *cfg.lattice);
    }
    cfg.declared_p = opt_double(model, "model", "declared_p", 0);
    if (cfg.declared_p < 0) throw ConfigError("model.declared_p", "must be positive");

    const json& task = need(j, "", "task");
    if (!task.is_object()) throw ConfigError("task", "expected an object");
    cfg.task_name = as_string(need(task, "task", "name"), "task.name");
    cfg.task = parse_task(task, "task", cfg.task_name, cfg.lattice);

    if (const json* p = find(j, "numeric")) {
        check_keys(*p, "numeric", {"lambda_max", "dense_cap", "force_dense", "seed"});
        cfg.numeric.lambda_max = opt_double(*p, "numeric", "lambda_max", 0);
        cfg.numeric.dense_cap = opt_integer(*p, "numeric", "dense_cap", cfg.numeric.dense_cap);
        cfg.numeric.force_dense = opt_bool(*p, "numeric", "force_dense", false);
        if (const json* s = find(*p, "seed")) {
            if (!s->is_number_unsigned() && !s->is_number_integer())
                throw ConfigError("numeric.seed", "expected an integer");
            cfg.numeric.seed = s->get<std::uint64_t>();
        }
        if (cfg.numeric.lambda_max < 0) throw ConfigError("numeric.lambda_max", "must be >= 0");
        if (cfg.numeric.dense_cap < 1) throw ConfigError("numeric.dense_cap", "must be positive");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path, e.what());
    }
    return parse_config(j);
}

std::vector<std::string> validate_config(const RunConfig& cfg) {
    std::vector<std::string> warnings;
    const int k = cfg.cs_spec.dim();
    const int m = cfg.lattice ? cfg.lattice->dim() : 0;
    const int d = k + m;
    const bool boundary = cfg.cs_spec.kind == CrossSectionSpec::Kind::Interval ||
                          cfg.cs_spec.kind == CrossSectionSpec::Kind::IntervalTimesTorus;
    auto num = [](double v) {
        std::ostringstream ss;
        ss << v;
        return ss.str();
    };

    if (m > 0 && d < 3)
        warnings.push_back("total dimension d = " + std::to_string(d) +
                           " is below the analyzed range d >= 3");

    if (cfg.declared_p > 0) {
        const double p = cfg.declared_p;
        if (p <= 1) {
            warnings.push_back("declared_p = " + num(p) +
                               " leaves the dual exponent q = 2p/(p-1) undefined; need p > 1");
        } else if (d > 2) {
            const double q = 2 * p / (p - 1);
            const double q_hi = 2.0 * d / (d - 2);
            if (q >= q_hi)
                warnings.push_back("declared_p = " + num(p) + " gives q = 2p/(p-1) = " + num(q) +
                                   " outside the admissible window (2, 2d/(d-2)) = (2, " +
                                   num(q_hi) + ") in dimension " + std::to_string(d));
        }
        if (!boundary && 2 * p <= d)
            warnings.push_back("declared_p = " + num(p) +
                               " is below the threshold p > d/2 = " + num(d / 2.0) +
                               " required without boundary");
        if (boundary && d >= 5 && p <= d - 2)
            warnings.push_back("declared_p = " + num(p) +
                               " is below the threshold p > d-2 = " + num(d - 2.0) +
                               " required with boundary in dimension >= 5");
    }

    if (cfg.sigma && !cfg.sigma->zero()) {
        if (!boundary) {
            warnings.push_back("a boundary weight is declared but the cross-section has no "
                               "boundary; assembly will reject this model");
        } else {
            const int q_need = d == 3 ? 2 : 2 * d - 2;
            warnings.push_back("boundary weight bookkeeping: sigma is taken in L_q with q = " +
                               std::to_string(q_need) + " for d = " + std::to_string(d) +
                               "; a finite harmonic series qualifies automatically");
        }
    }
    return warnings;
}

} // namespace tlab
