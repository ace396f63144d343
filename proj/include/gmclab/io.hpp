#pragma once
// JSON forms of kernel and mollifier specifications, two-column CSV tables,
// and the binary ensemble container with its JSON sidecar.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gmclab/error.hpp"
#include "gmclab/kernels.hpp"
#include "gmclab/synth.hpp"

namespace gmclab {

using nlohmann::json;

/// Quadrature tolerance recorded with every serialised kernel.
constexpr double kKernelTolerance = 1e-10;

/// Rows "r,value" (a non-numeric first line is taken as a header).
inline std::vector<std::pair<double, double>> load_two_column_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open " + path);
    std::vector<std::pair<double, double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        for (auto& c : line)
            if (c == ';' || c == '\t') c = ',';
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError(path + ":" + std::to_string(lineno) + ": expected two columns");
        try {
            const double r = std::stod(line.substr(0, comma));
            const double v = std::stod(line.substr(comma + 1));
            rows.emplace_back(r, v);
        } catch (const std::invalid_argument&) {
            if (lineno == 1 && rows.empty()) continue;
            throw DataError(path + ":" + std::to_string(lineno) + ": not a number");
        }
    }
    if (rows.size() < 2) throw DataError(path + ": fewer than two data rows");
    return rows;
}

namespace detail {

inline json table_json(const std::vector<std::pair<double, double>>& t) {
    json a = json::array();
    for (const auto& [r, v] : t) a.push_back({r, v});
    return a;
}

inline std::vector<std::pair<double, double>> table_from(const json& p, const std::string& base_dir) {
    if (p.contains("csv")) {
        std::filesystem::path path = p.at("csv").get<std::string>();
        if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
        return load_two_column_csv(path.string());
    }
    std::vector<std::pair<double, double>> t;
    for (const auto& row : p.at("samples")) t.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    return t;
}

}  // namespace detail

inline json to_json(const ScaleKernel& k) {
    json p = json::object();
    if (k.form() == ScaleKernel::Form::Tabulated) p["samples"] = detail::table_json(*k.table());
    return {{"form", k.name()}, {"d", k.dimension()}, {"parameters", p}, {"tolerance", kKernelTolerance}};
}

inline json to_json(const SmoothKernel& k) {
    json p = json::object();
    if (k.form() == SmoothKernel::Form::GaussianBump) p = {{"amplitude", k.amplitude()}, {"width", k.width()}};
    if (k.form() == SmoothKernel::Form::Tabulated2D) throw DataError("tabulated K0 has no JSON form");
    return {{"form", k.name()}, {"parameters", p}};
}

inline json to_json(const Mollifier& m) {
    return {{"form", m.name()}, {"d", m.dimension()}, {"normalization_constant", m.normalization_constant()}};
}

inline json to_json(const KernelSpec& s) {
    return {{"d", s.d}, {"kappa", to_json(s.kappa)}, {"k0", to_json(s.k0)}};
}

inline json to_json(const Grid& g) { return {{"d", g.d}, {"n", g.n}, {"side", g.side}, {"h", g.h()}}; }

inline json to_json(const LayerSchedule& s) {
    return {{"t_max", s.t_max()}, {"dt", s.dt}, {"layers", s.layers()}};
}

/// `base_dir` resolves relative "csv" paths of tabulated kernels.
inline ScaleKernel scale_kernel_from_json(const json& j, int d, const std::string& base_dir = "") {
    const auto form = j.at("form").get<std::string>();
    const json p = j.value("parameters", json::object());
    if (form == "Triangle") {
        require(d == 1, "the triangle kernel is positive definite only in d = 1");
        return ScaleKernel::triangle();
    }
    if (form == "BallSelfConvolution") return ScaleKernel::ball_self_convolution(d);
    if (form == "Tabulated") return ScaleKernel::tabulated(detail::table_from(p, base_dir), d);
    throw DataError("unknown kappa form '" + form + "'");
}

inline SmoothKernel smooth_kernel_from_json(const json& j) {
    const auto form = j.at("form").get<std::string>();
    const json p = j.value("parameters", json::object());
    if (form == "Zero") return SmoothKernel::zero();
    if (form == "GaussianBump") return SmoothKernel::gaussian_bump(p.at("amplitude").get<double>(), p.at("width").get<double>());
    throw DataError("unknown K0 form '" + form + "'");
}

inline Mollifier mollifier_from_json(const json& j, int d, const std::string& base_dir = "") {
    const auto form = j.at("form").get<std::string>();
    if (form == "StandardBump") return Mollifier::standard_bump(d);
    if (form == "Tabulated") return Mollifier::tabulated(detail::table_from(j.value("parameters", json::object()), base_dir), d);
    throw DataError("unknown mollifier form '" + form + "'");
}

// ---------------------------------------------------------------------------
// ensemble container

/// Sidecar of an exported ensemble.  The .bin file holds replicas x sites float64
/// values, little-endian, row-major (one replica per row).
struct EnsembleHeader {
    json meta;
    std::size_t replicas = 0;
    std::size_t sites = 0;
};

namespace detail {

inline void write_le_doubles(std::ofstream& os, const std::vector<double>& v) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    } else {
        for (double x : v) {
            auto u = std::bit_cast<std::uint64_t>(x);
            u = __builtin_bswap64(u);
            os.write(reinterpret_cast<const char*>(&u), sizeof u);
        }
    }
}

}  // namespace detail

/// Writes <stem>.bin and <stem>.json.  With `filter` the mollified fields are exported.
inline EnsembleHeader export_ensemble(const FieldEnsemble& e, const std::string& stem,
                                      const MollifierFilter* filter = nullptr) {
    const std::size_t L = e.schedule().layers();
    std::ofstream os(stem + ".bin", std::ios::binary);
    if (!os) throw Error("cannot write " + stem + ".bin");
    for (std::size_t r = 0; r < e.replicas(); ++r) {
        auto w = e.walker(r);
        w.run_to(L);
        detail::write_le_doubles(os, filter ? w.mollified(*filter) : w.field());
    }
    os.close();
    EnsembleHeader h;
    h.replicas = e.replicas();
    h.sites = e.grid().size();
    h.meta = {{"format", "float64 little-endian, row-major [replica][site]"},
              {"file", std::filesystem::path(stem + ".bin").filename().string()},
              {"shape", {h.replicas, h.sites}},
              {"kernel", to_json(e.spec())},
              {"grid", to_json(e.grid())},
              {"schedule", to_json(e.schedule())},
              {"dt_split", e.options().dt_split},
              {"restrict_factor", e.options().restrict_factor},
              {"seed", e.seed()},
              {"generator", e.generator()},
              {"clipped_mass", e.clipped_mass()}};
    h.meta["eps"] = filter ? json(filter->eps()) : json(nullptr);
    h.meta["mollifier"] = filter ? to_json(filter->mollifier()) : json(nullptr);
    std::ofstream js(stem + ".json");
    if (!js) throw Error("cannot write " + stem + ".json");
    js << h.meta.dump(2) << '\n';
    return h;
}

/// Reads an exported ensemble back (values[r][i]).
inline std::vector<std::vector<double>> import_ensemble(const std::string& stem, EnsembleHeader* header = nullptr) {
    std::ifstream js(stem + ".json");
    if (!js) throw DataError("cannot open " + stem + ".json");
    EnsembleHeader h;
    h.meta = json::parse(js);
    h.replicas = h.meta.at("shape").at(0).get<std::size_t>();
    h.sites = h.meta.at("shape").at(1).get<std::size_t>();
    std::ifstream is(stem + ".bin", std::ios::binary);
    if (!is) throw DataError("cannot open " + stem + ".bin");
    std::vector<std::vector<double>> out(h.replicas, std::vector<double>(h.sites));
    for (auto& row : out) {
        is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
        if (!is) throw DataError(stem + ".bin is shorter than its sidecar declares");
        if constexpr (std::endian::native != std::endian::little) {
            for (auto& x : row) x = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(x)));
        }
    }
    if (header) *header = std::move(h);
    return out;
}

}  // namespace gmclab
