#pragma once
// Experiment configuration: JSON text, validated against the published schema
// (configs/schema.json), with violations reported as file:line:column.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gmclab/analysis.hpp"
#include "gmclab/error.hpp"
#include "gmclab/io.hpp"
#include "gmclab/kernels.hpp"
#include "gmclab/synth.hpp"

namespace gmclab {

// ---------------------------------------------------------------------------
// source positions of JSON values

/// Maps every JSON pointer in a document to the 1-based line and column where its value starts.
class JsonLocator {
public:
    explicit JsonLocator(const std::string& text) : s_(text) {
        skip_ws();
        if (i_ < s_.size()) value("");
    }

    std::pair<std::size_t, std::size_t> find(std::string ptr) const {
        // a missing member is reported at its parent object
        while (true) {
            if (auto it = pos_.find(ptr); it != pos_.end()) return line_col(it->second);
            if (ptr.empty()) return {1, 1};
            ptr = ptr.substr(0, ptr.rfind('/'));
        }
    }

private:
    std::pair<std::size_t, std::size_t> line_col(std::size_t off) const {
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k < off && k < s_.size(); ++k) {
            if (s_[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return {line, col};
    }

    void skip_ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    std::string string_token() {
        std::string out;
        ++i_;  // opening quote
        while (i_ < s_.size() && s_[i_] != '"') {
            if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
                ++i_;
                out.push_back(s_[i_] == 'n' ? '\n' : s_[i_]);  // only the key text matters here
            } else {
                out.push_back(s_[i_]);
            }
            ++i_;
        }
        ++i_;
        return out;
    }

    static std::string escape(const std::string& key) {
        std::string out;
        for (char c : key) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out.push_back(c);
        }
        return out;
    }

    void value(const std::string& ptr) {
        pos_[ptr] = i_;
        if (i_ >= s_.size()) return;
        const char c = s_[i_];
        if (c == '{') {
            ++i_;
            skip_ws();
            while (i_ < s_.size() && s_[i_] != '}') {
                const std::string key = string_token();
                skip_ws();
                ++i_;  // colon
                skip_ws();
                value(ptr + "/" + escape(key));
                skip_ws();
                if (i_ < s_.size() && s_[i_] == ',') ++i_;
                skip_ws();
            }
            ++i_;
        } else if (c == '[') {
            ++i_;
            skip_ws();
            std::size_t k = 0;
            while (i_ < s_.size() && s_[i_] != ']') {
                value(ptr + "/" + std::to_string(k++));
                skip_ws();
                if (i_ < s_.size() && s_[i_] == ',') ++i_;
                skip_ws();
            }
            ++i_;
        } else if (c == '"') {
            string_token();
        } else {
            while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != ',' &&
                   s_[i_] != '}' && s_[i_] != ']')
                ++i_;
        }
    }

    const std::string& s_;
    std::size_t i_ = 0;
    std::map<std::string, std::size_t> pos_;
};

// ---------------------------------------------------------------------------
// typed access with diagnostics

class ConfigNode {
public:
    ConfigNode(const nlohmann::json* j, std::string ptr, const std::string* source, const JsonLocator* loc)
        : j_(j), ptr_(std::move(ptr)), source_(source), loc_(loc) {}

    [[noreturn]] void fail(const std::string& msg) const {
        const auto [line, col] = loc_->find(ptr_);
        throw ConfigError(*source_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                          (ptr_.empty() ? "/" : ptr_) + ": " + msg);
    }

    const std::string& pointer() const { return ptr_; }
    const nlohmann::json& raw() const { return *j_; }
    bool is_null() const { return j_->is_null(); }

    bool has(const std::string& key) const { return j_->is_object() && j_->contains(key) && !(*j_)[key].is_null(); }

    ConfigNode at(const std::string& key) const {
        require_type(j_->is_object(), "an object");
        if (!j_->contains(key)) fail("missing required field '" + key + "'");
        return ConfigNode(&(*j_)[key], ptr_ + "/" + key, source_, loc_);
    }

    ConfigNode operator[](std::size_t k) const { return ConfigNode(&(*j_)[k], ptr_ + "/" + std::to_string(k), source_, loc_); }

    std::size_t size() const { return j_->size(); }

    void only_keys(const std::set<std::string>& allowed) const {
        require_type(j_->is_object(), "an object");
        for (const auto& [k, v] : j_->items()) {
            if (!allowed.count(k)) {
                ConfigNode(&v, ptr_ + "/" + k, source_, loc_).fail("unknown field '" + k + "'");
            }
        }
    }

    void require_type(bool ok, const std::string& what) const {
        if (!ok) fail("expected " + what + ", got " + std::string(j_->type_name()));
    }

    double number() const {
        require_type(j_->is_number(), "a number");
        return j_->get<double>();
    }
    double positive() const {
        const double v = number();
        if (!(v > 0.0)) fail("must be positive, got " + j_->dump());
        return v;
    }
    std::int64_t integer() const {
        require_type(j_->is_number_integer(), "an integer");
        return j_->get<std::int64_t>();
    }
    std::uint64_t unsigned_integer() const {
        const auto v = integer();
        if (v < 0) fail("must be nonnegative, got " + j_->dump());
        return static_cast<std::uint64_t>(v);
    }
    bool boolean() const {
        require_type(j_->is_boolean(), "true or false");
        return j_->get<bool>();
    }
    std::string string() const {
        require_type(j_->is_string(), "a string");
        return j_->get<std::string>();
    }
    std::string one_of(const std::set<std::string>& options) const {
        const auto s = string();
        if (!options.count(s)) {
            std::string list;
            for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
            fail("'" + s + "' is not one of {" + list + "}");
        }
        return s;
    }
    std::vector<double> numbers() const {
        require_type(j_->is_array(), "an array of numbers");
        std::vector<double> out;
        for (std::size_t k = 0; k < size(); ++k) out.push_back((*this)[k].number());
        return out;
    }

private:
    const nlohmann::json* j_;
    std::string ptr_;
    const std::string* source_;
    const JsonLocator* loc_;
};

// ---------------------------------------------------------------------------
// the configuration

struct FunctionSpec {
    double lo = 1.0, hi = 2.0;
    TestFunction build(const Grid& g) const { return TestFunction::bump(g, lo, hi); }
    nlohmann::json to_json() const { return {{"form", "bump"}, {"lo", lo}, {"hi", hi}}; }
};

struct QvConfig {
    QvMode mode = QvMode::Martingale;
    std::optional<double> eps;  // convolution mode; defaults to the finest ladder value
    std::vector<double> b_times;
};

struct TightnessConfig {
    double u = 0.0;  // 0 selects d/2 + 0.25
    std::vector<double> a_fractions{1.0, 0.5, 0.25};
};

struct DecomposeConfig {
    std::string instance = "synthetic";  // or "star"
    std::vector<double> delta{0.5, 0.1, 0.01};
    double s = 2.0;
    std::size_t points = 512;
    double t0_step = 0.5, t0_max = 30.0;
};

struct ScanPhaseConfig {
    std::vector<ComplexParam> gamma;  // defaults to the main gamma list
};

struct AcceptanceConfig {
    std::string profile = "full";  // or "smoke"
    std::map<std::string, bool> enabled;  // AC-1 .. AC-10, all true by default
};

inline const std::vector<std::string>& criterion_ids() {
    static const std::vector<std::string> ids{"AC-1", "AC-2", "AC-3", "AC-4", "AC-5",
                                              "AC-6", "AC-7", "AC-8", "AC-9", "AC-10"};
    return ids;
}

struct ExperimentConfig {
    std::string source = "<config>";
    std::string text;       // verbatim bytes
    nlohmann::json json;    // parsed
    std::string base_dir;   // directory of the config file

    KernelSpec kernel;
    Mollifier mollifier = Mollifier::standard_bump(1);
    Grid grid;
    std::optional<double> t_max;
    double dt = LayerSchedule::kDefaultStep;
    SynthOptions synth;
    std::vector<ComplexParam> gamma{{0.5, std::sqrt(1.75)}};
    double omega = 0.0;
    FunctionSpec f, rho;
    std::vector<DiscreteMeasure> measures;
    std::vector<double> eps;
    std::size_t replicas = 200;
    std::uint64_t seed = 1;
    std::string output_dir;

    QvConfig qv;
    TightnessConfig tightness;
    DecomposeConfig decompose;
    ScanPhaseConfig scan_phase;
    std::optional<double> synthesize_eps;
    AcceptanceConfig acceptance;

    LayerSchedule schedule() const {
        return t_max ? LayerSchedule::uniform(*t_max, dt) : LayerSchedule::for_grid(grid, dt);
    }
    std::string hash() const { return sha256_hex(text); }
};

namespace detail {

inline ComplexParam gamma_from(const ConfigNode& n) {
    n.only_keys({"alpha", "beta"});
    return ComplexParam{n.at("alpha").number(), n.at("beta").number()};
}

inline std::vector<ComplexParam> gamma_list(const ConfigNode& n) {
    n.require_type(n.raw().is_array() && n.size() > 0, "a nonempty array of {alpha, beta}");
    std::vector<ComplexParam> out;
    for (std::size_t k = 0; k < n.size(); ++k) out.push_back(gamma_from(n[k]));
    return out;
}

inline FunctionSpec function_from(const ConfigNode& n, double side) {
    n.only_keys({"form", "lo", "hi"});
    n.at("form").one_of({"bump"});
    FunctionSpec f{n.at("lo").number(), n.at("hi").number()};
    if (!(f.lo < f.hi)) n.fail("needs lo < hi");
    if (!(f.lo > 0.0 && f.hi < side)) n.at("hi").fail("support must lie inside (0, side)");
    return f;
}

inline Point point_from(const ConfigNode& n, int d) {
    if (d == 1 && n.raw().is_number()) return Point{n.number(), 0.0};
    n.require_type(n.raw().is_array() && static_cast<int>(n.size()) == d, "a point with " + std::to_string(d) + " coordinates");
    Point p{0.0, 0.0};
    for (int a = 0; a < d; ++a) p[a] = n[a].number();
    return p;
}

inline std::vector<double> eps_ladder_from(const ConfigNode& n) {
    std::vector<double> eps;
    if (n.raw().is_array()) {
        eps = n.numbers();
    } else {
        n.only_keys({"base", "exponents"});
        const double base = n.at("base").positive();
        const auto ex = n.at("exponents");
        ex.require_type(ex.raw().is_array(), "an array of integers");
        for (std::size_t k = 0; k < ex.size(); ++k) eps.push_back(base * std::ldexp(1.0, -static_cast<int>(ex[k].integer())));
    }
    if (eps.empty()) n.fail("eps ladder is empty");
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0 && eps[k] < 1.0)) n.fail("eps values must lie in (0, 1), got " + std::to_string(eps[k]));
    }
    std::sort(eps.begin(), eps.end(), std::greater<>());
    for (std::size_t k = 1; k < eps.size(); ++k) {
        if (eps[k] == eps[k - 1]) n.fail("eps ladder has repeated values");
    }
    for (std::size_t k = 2; k < eps.size(); ++k) {
        const double q0 = eps[1] / eps[0], q = eps[k] / eps[k - 1];
        if (std::abs(q - q0) > 1e-9 * q0) n.fail("eps ladder is not geometric");
    }
    return eps;
}

}  // namespace detail

/// Parses and validates configuration text; `source` names it in diagnostics.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>",
                                     const std::string& base_dir = "") {
    ExperimentConfig c;
    c.source = source;
    c.text = text;
    c.base_dir = base_dir;
    try {
        c.json = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // e.byte is the 1-based offset of the offending character
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON: " + e.what());
    }
    const JsonLocator loc(text);
    const ConfigNode root(&c.json, "", &c.source, &loc);
    root.require_type(c.json.is_object(), "a JSON object at the top level");
    root.only_keys({"$schema", "description", "kernel", "mollifier", "grid", "schedule", "gamma", "omega", "f",
                    "rho", "measures", "eps_ladder", "replicas", "seed", "output_dir", "qv", "tightness",
                    "decompose", "scan_phase", "synthesize", "acceptance"});

    // kernel, needed first for d
    const auto kn = root.at("kernel");
    kn.only_keys({"d", "kappa", "k0"});
    const auto dn = kn.at("d");
    const int d = static_cast<int>(dn.integer());
    if (d != 1 && d != 2) dn.fail("d must be 1 or 2");
    c.kernel.d = d;
    auto guarded = [](const ConfigNode& n, auto&& fn) {
        try {
            return fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            n.fail(ex.what());
        }
    };
    {
        const auto kap = kn.at("kappa");
        kap.only_keys({"form", "d", "parameters", "tolerance"});
        kap.at("form").one_of({"Triangle", "BallSelfConvolution", "Tabulated"});
        if (kap.has("d") && kap.at("d").integer() != d) kap.at("d").fail("kappa dimension differs from kernel d");
        if (kap.has("tolerance")) kap.at("tolerance").positive();
        c.kernel.kappa = guarded(kap, [&] { return scale_kernel_from_json(kap.raw(), d, base_dir); });
    }
    if (kn.has("k0")) {
        const auto k0 = kn.at("k0");
        k0.only_keys({"form", "parameters"});
        k0.at("form").one_of({"Zero", "GaussianBump"});
        c.kernel.k0 = guarded(k0, [&] { return smooth_kernel_from_json(k0.raw()); });
    }
    c.mollifier = Mollifier::standard_bump(d);
    if (root.has("mollifier")) {
        const auto mn = root.at("mollifier");
        mn.only_keys({"form", "parameters"});
        mn.at("form").one_of({"StandardBump", "Tabulated"});
        c.mollifier = guarded(mn, [&] { return mollifier_from_json(mn.raw(), d, base_dir); });
    }

    {
        const auto gn = root.at("grid");
        gn.only_keys({"n", "side"});
        const auto nn = gn.at("n");
        const auto n = nn.integer();
        if (n < 2 || (n & (n - 1)) != 0) nn.fail("n must be a power of two, got " + std::to_string(n));
        c.grid = guarded(gn, [&] { return Grid::make(d, static_cast<int>(n), gn.at("side").positive()); });
        if (!(c.grid.side > 2.0)) gn.at("side").fail("side must exceed 2 so that kappa fits in half the period");
    }
    if (root.has("schedule")) {
        const auto sn = root.at("schedule");
        sn.only_keys({"t_max", "dt", "dt_split", "restrict_factor"});
        if (sn.has("t_max")) {
            c.t_max = sn.at("t_max").positive();
            if (*c.t_max < std::log(1.0 / c.grid.h()) - 1e-12) sn.at("t_max").fail("t_max must be at least log(1/h)");
        }
        if (sn.has("dt")) c.dt = sn.at("dt").positive();
        if (sn.has("dt_split")) {
            c.synth.dt_split = static_cast<int>(sn.at("dt_split").integer());
            if (c.synth.dt_split != 1 && c.synth.dt_split != 2) sn.at("dt_split").fail("dt_split must be 1 or 2");
        }
        if (sn.has("restrict_factor")) {
            c.synth.restrict_factor = static_cast<int>(sn.at("restrict_factor").integer());
            if (c.synth.restrict_factor != 1 && c.synth.restrict_factor != 2)
                sn.at("restrict_factor").fail("restrict_factor must be 1 or 2");
        }
    }
    if (root.has("gamma")) c.gamma = detail::gamma_list(root.at("gamma"));
    if (root.has("omega")) c.omega = root.at("omega").number();
    c.f = FunctionSpec{1.0, std::min(2.0, c.grid.side - 1.0)};
    if (root.has("f")) c.f = detail::function_from(root.at("f"), c.grid.side);
    c.rho = c.f;
    if (root.has("rho")) c.rho = detail::function_from(root.at("rho"), c.grid.side);
    if (root.has("measures")) {
        const auto mn = root.at("measures");
        mn.require_type(mn.raw().is_array(), "an array of measures");
        for (std::size_t k = 0; k < mn.size(); ++k) {
            const auto m = mn[k];
            m.only_keys({"atoms", "weights"});
            const auto an = m.at("atoms"), wn = m.at("weights");
            an.require_type(an.raw().is_array(), "an array of points");
            const auto w = wn.numbers();
            if (w.size() != an.size()) wn.fail("weights and atoms differ in length");
            DiscreteMeasure mu;
            for (std::size_t i = 0; i < an.size(); ++i) {
                const Point p = detail::point_from(an[i], d);
                for (int a = 0; a < d; ++a)
                    if (!(p[a] >= 0.0 && p[a] < c.grid.side)) an[i].fail("atom lies outside [0, side)");
                mu.atoms.push_back(p);
            }
            mu.weights = w;
            c.measures.push_back(std::move(mu));
        }
    }
    if (root.has("eps_ladder")) {
        c.eps = detail::eps_ladder_from(root.at("eps_ladder"));
    } else {
        // the default ladder stops where the grid no longer resolves it
        for (int k = 4; k <= 9; ++k) {
            const double e = c.grid.side * std::ldexp(1.0, -k);
            if (e >= 2.0 * c.grid.h() && e < 1.0) c.eps.push_back(e);
        }
        if (c.eps.empty()) root.at("grid").fail("grid too coarse for the default eps ladder; give eps_ladder");
    }
    for (double e : c.eps) {
        if (e < 2.0 * c.grid.h()) {
            (root.has("eps_ladder") ? root.at("eps_ladder") : root).fail(
                "eps = " + std::to_string(e) + " is below two grid spacings (h = " + std::to_string(c.grid.h()) + ")");
        }
    }
    if (root.has("replicas")) {
        const auto rn = root.at("replicas");
        c.replicas = rn.unsigned_integer();
        if (c.replicas < 1) rn.fail("need at least one replica");
    }
    if (root.has("seed")) c.seed = root.at("seed").unsigned_integer();
    if (root.has("output_dir")) c.output_dir = root.at("output_dir").string();

    if (root.has("qv")) {
        const auto q = root.at("qv");
        q.only_keys({"mode", "eps", "b_times"});
        if (q.has("mode")) c.qv.mode = q.at("mode").one_of({"martingale", "convolution"}) == "martingale" ? QvMode::Martingale : QvMode::Convolution;
        if (q.has("eps")) c.qv.eps = q.at("eps").positive();
        if (q.has("b_times")) c.qv.b_times = q.at("b_times").numbers();
    }
    if (root.has("tightness")) {
        const auto t = root.at("tightness");
        t.only_keys({"u", "a_fractions"});
        if (t.has("u")) {
            c.tightness.u = t.at("u").number();
            if (!(c.tightness.u > 0.5 * d)) t.at("u").fail("u must exceed d/2");
        }
        if (t.has("a_fractions")) c.tightness.a_fractions = t.at("a_fractions").numbers();
    }
    if (root.has("decompose")) {
        const auto dc = root.at("decompose");
        dc.only_keys({"instance", "delta", "s", "points", "t0_step", "t0_max"});
        if (dc.has("instance")) c.decompose.instance = dc.at("instance").one_of({"synthetic", "star"});
        if (dc.has("delta")) {
            c.decompose.delta = dc.at("delta").numbers();
            for (std::size_t k = 0; k < c.decompose.delta.size(); ++k) dc.at("delta")[k].positive();
        }
        if (dc.has("s")) {
            c.decompose.s = dc.at("s").number();
            if (!(c.decompose.s > d)) dc.at("s").fail("s must exceed d");
        }
        if (dc.has("points")) {
            c.decompose.points = dc.at("points").unsigned_integer();
            if (c.decompose.points < 2 || c.decompose.points > 512) dc.at("points").fail("points must lie in 2..512");
        }
        if (dc.has("t0_step")) c.decompose.t0_step = dc.at("t0_step").positive();
        if (dc.has("t0_max")) c.decompose.t0_max = dc.at("t0_max").positive();
    }
    if (root.has("scan_phase")) {
        const auto sp = root.at("scan_phase");
        sp.only_keys({"gamma"});
        c.scan_phase.gamma = detail::gamma_list(sp.at("gamma"));
    }
    if (root.has("synthesize")) {
        const auto sy = root.at("synthesize");
        sy.only_keys({"eps"});
        if (sy.has("eps")) c.synthesize_eps = sy.at("eps").positive();
    }
    for (const auto& id : criterion_ids()) c.acceptance.enabled[id] = true;
    if (root.has("acceptance")) {
        const auto ac = root.at("acceptance");
        ac.only_keys({"profile", "criteria"});
        if (ac.has("profile")) c.acceptance.profile = ac.at("profile").one_of({"full", "smoke"});
        if (ac.has("criteria")) {
            const auto cr = ac.at("criteria");
            cr.only_keys(std::set<std::string>(criterion_ids().begin(), criterion_ids().end()));
            for (const auto& [k, v] : cr.raw().items()) c.acceptance.enabled[k] = cr.at(k).boolean();
        }
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError(path + ": cannot open configuration file");
    std::ostringstream ss;
    ss << is.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_config(ss.str(), path, dir);
}

}  // namespace gmclab
