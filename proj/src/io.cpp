#include "fdot/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace fdot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Parse rejecting duplicate object keys, which nlohmann silently overwrites.
json parse_strict(std::istream& in, const std::string& what) {
    std::vector<std::set<std::string>> seen;
    json::parser_callback_t cb = [&](int /*depth*/, json::parse_event_t event, json& value) {
        if (event == json::parse_event_t::object_start) {
            seen.emplace_back();
        } else if (event == json::parse_event_t::object_end) {
            seen.pop_back();
        } else if (event == json::parse_event_t::key) {
            const auto key = value.get<std::string>();
            if (!seen.back().insert(key).second)
                throw ConfigError(what + ": duplicate key \"" + key + "\"");
        }
        return true;
    };
    try {
        return json::parse(in, cb);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("unknown key \"" + path + key + "\"");
    }
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError("key \"" + path + key + "\" must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw ConfigError("key \"" + path + key + "\" must be an integer");
    return obj[key].get<int>();
}

Vec3 get_vec3(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.size() != 3)
        throw ConfigError("key \"" + path + "\" must be an array of 3 numbers");
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

std::string resolve_path(const std::string& base_dir, const std::string& p) {
    if (base_dir.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).string();
}

void require_file(const std::string& path, const std::string& key) {
    if (!fs::exists(path))
        throw ConfigError("key \"" + key + "\": referenced file does not exist: " + path);
}

}  // namespace

InstrumentResponse IrfSpec::load() const {
    if (is_delta) return InstrumentResponse::delta(tau);
    return read_irf_profile(path, tau);
}

std::vector<SourceDetectorPair> RunConfig::pairs() const {
    if (std::holds_alternative<std::vector<SourceDetectorPair>>(layout))
        return std::get<std::vector<SourceDetectorPair>>(layout);
    const auto& name = std::get<std::string>(layout);
    if (name == "paper32") return layout_paper32();
    if (name == "beef16") return layout_beef16();
    throw ConfigError("unknown layout \"" + name + "\"");
}

PipelineConfig RunConfig::pipeline(int threads) const {
    PipelineConfig p;
    p.topography = topography;
    p.bounds = bounds;
    p.lm = lm;
    p.quad = quad;
    p.n_t = time.n_t;
    p.peak_offset = time.peak_offset;
    p.stage2_init = stage2_init;
    p.threads = threads;
    return p;
}

RunConfig parse_config(const json& doc, const std::string& base_dir) {
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    check_keys(doc, "", {"medium", "irf", "layout", "target", "time", "noise", "bounds", "lm",
                         "quadrature", "topography", "stage2_init", "output_dir"});
    RunConfig cfg;

    if (doc.contains("medium")) {
        const auto& m = doc["medium"];
        check_keys(m, "medium.", {"mu_s_prime", "mu_a", "n_rel"});
        cfg.mu_s_prime = get_number(m, "medium.", "mu_s_prime", cfg.mu_s_prime);
        cfg.mu_a = get_number(m, "medium.", "mu_a", cfg.mu_a);
        cfg.n_rel = get_number(m, "medium.", "n_rel", cfg.n_rel);
    }

    if (doc.contains("irf")) {
        const auto& i = doc["irf"];
        check_keys(i, "irf.", {"kind", "path", "tau"});
        const std::string kind = i.value("kind", "delta");
        cfg.irf.tau = get_number(i, "irf.", "tau", 0.0);
        if (kind == "delta") {
            cfg.irf.is_delta = true;
        } else if (kind == "sampled") {
            cfg.irf.is_delta = false;
            if (!i.contains("path")) throw ConfigError("irf.path required for sampled IRF");
            cfg.irf.path = resolve_path(base_dir, i["path"].get<std::string>());
            require_file(cfg.irf.path, "irf.path");
        } else {
            throw ConfigError("irf.kind must be \"delta\" or \"sampled\"");
        }
        if (cfg.irf.tau < 0.0) throw ConfigError("irf.tau must be nonnegative");
    }

    if (doc.contains("layout")) {
        const auto& l = doc["layout"];
        if (l.is_string()) {
            const auto name = l.get<std::string>();
            if (name != "paper32" && name != "beef16")
                throw ConfigError("layout must be \"paper32\", \"beef16\" or an explicit list");
            cfg.layout = name;
        } else if (l.is_object()) {
            check_keys(l, "layout.", {"pairs"});
            std::vector<SourceDetectorPair> pairs;
            int index = 1;
            for (const auto& row : l["pairs"]) {
                if (!row.is_array() || row.size() != 4)
                    throw ConfigError("layout.pairs rows must be [x_s, y_s, x_d, y_d]");
                pairs.push_back({{row[0].get<double>(), row[1].get<double>()},
                                 {row[2].get<double>(), row[3].get<double>()},
                                 index++});
            }
            if (pairs.empty()) throw ConfigError("layout.pairs is empty");
            cfg.layout = pairs;
        } else {
            throw ConfigError("layout must be a string or an object with \"pairs\"");
        }
    }

    if (doc.contains("target")) {
        const auto& t = doc["target"];
        check_keys(t, "target.",
                   {"kind", "center", "semiaxes", "n_value", "spacing", "x1", "x2", "y1", "y2",
                    "z1", "z2", "m", "path"});
        const std::string kind = t.value("kind", "");
        if (kind == "ellipsoid") {
            EllipsoidSpec spec;
            spec.target.center = get_vec3(t.at("center"), "target.center");
            spec.target.semiaxes = get_vec3(t.at("semiaxes"), "target.semiaxes");
            spec.target.n_value = get_number(t, "target.", "n_value", 0.0);
            spec.spacing = get_number(t, "target.", "spacing", 0.5);
            cfg.target = spec;
        } else if (kind == "cuboid") {
            Cuboid c{get_number(t, "target.", "x1", 0.0), get_number(t, "target.", "x2", 0.0),
                     get_number(t, "target.", "y1", 0.0), get_number(t, "target.", "y2", 0.0),
                     get_number(t, "target.", "z1", 0.0), get_number(t, "target.", "z2", 0.0),
                     get_number(t, "target.", "m", 0.0)};
            c.validate();
            cfg.target = c;
        } else if (kind == "voxels") {
            if (!t.contains("path")) throw ConfigError("target.path required for voxel targets");
            const auto path = resolve_path(base_dir, t["path"].get<std::string>());
            require_file(path, "target.path");
            cfg.target = path;
        } else {
            throw ConfigError("target.kind must be \"ellipsoid\", \"cuboid\" or \"voxels\"");
        }
    }

    if (doc.contains("time")) {
        const auto& t = doc["time"];
        check_keys(t, "time.", {"dt", "n_bins", "n_t", "peak_offset"});
        cfg.time.dt = get_number(t, "time.", "dt", cfg.time.dt);
        cfg.time.n_bins = get_int(t, "time.", "n_bins", cfg.time.n_bins);
        cfg.time.n_t = get_int(t, "time.", "n_t", cfg.time.n_t);
        cfg.time.peak_offset = get_int(t, "time.", "peak_offset", cfg.time.peak_offset);
    }
    if (cfg.time.dt <= 0.0) throw ConfigError("time.dt must be positive");
    if (cfg.time.n_t > cfg.time.n_bins)
        throw ConfigError("time.n_t (" + std::to_string(cfg.time.n_t) +
                          ") exceeds time.n_bins (" + std::to_string(cfg.time.n_bins) + ")");

    if (doc.contains("noise")) {
        const auto& n = doc["noise"];
        check_keys(n, "noise.", {"level", "seed"});
        cfg.noise.level = get_number(n, "noise.", "level", cfg.noise.level);
        if (cfg.noise.level < 0.0) throw ConfigError("noise.level must be nonnegative");
        if (n.contains("seed")) cfg.noise.seed = n["seed"].get<uint64_t>();
    }

    if (doc.contains("bounds")) {
        const auto& b = doc["bounds"];
        check_keys(b, "bounds.",
                   {"lateral_min", "lateral_max", "z0_max", "l_max", "m_max", "z_face_max",
                    "z_eps"});
        cfg.bounds.lateral_min = get_number(b, "bounds.", "lateral_min", cfg.bounds.lateral_min);
        cfg.bounds.lateral_max = get_number(b, "bounds.", "lateral_max", cfg.bounds.lateral_max);
        cfg.bounds.z0_max = get_number(b, "bounds.", "z0_max", cfg.bounds.z0_max);
        cfg.bounds.l_max = get_number(b, "bounds.", "l_max", cfg.bounds.l_max);
        cfg.bounds.m_max = get_number(b, "bounds.", "m_max", cfg.bounds.m_max);
        cfg.bounds.z_face_max = get_number(b, "bounds.", "z_face_max", cfg.bounds.z_face_max);
        cfg.bounds.z_eps = get_number(b, "bounds.", "z_eps", cfg.bounds.z_eps);
    }

    if (doc.contains("lm")) {
        const auto& l = doc["lm"];
        check_keys(l, "lm.",
                   {"lambda0", "lambda_up", "lambda_down", "max_iter", "gtol", "ftol", "xtol",
                    "fd_step"});
        cfg.lm.lambda0 = get_number(l, "lm.", "lambda0", cfg.lm.lambda0);
        cfg.lm.lambda_up = get_number(l, "lm.", "lambda_up", cfg.lm.lambda_up);
        cfg.lm.lambda_down = get_number(l, "lm.", "lambda_down", cfg.lm.lambda_down);
        cfg.lm.max_iter = get_int(l, "lm.", "max_iter", cfg.lm.max_iter);
        cfg.lm.gtol = get_number(l, "lm.", "gtol", cfg.lm.gtol);
        cfg.lm.ftol = get_number(l, "lm.", "ftol", cfg.lm.ftol);
        cfg.lm.xtol = get_number(l, "lm.", "xtol", cfg.lm.xtol);
        cfg.lm.fd_step = get_number(l, "lm.", "fd_step", cfg.lm.fd_step);
        if (!(cfg.lm.lambda_up > 1.0 && cfg.lm.lambda_down < 1.0 && cfg.lm.lambda_down > 0.0))
            throw ConfigError("lm damping factors must satisfy lambda_up > 1 > lambda_down > 0");
    }

    if (doc.contains("quadrature")) {
        const auto& q = doc["quadrature"];
        check_keys(q, "quadrature.", {"time_nodes", "z_nodes", "outer_nodes", "check_tol"});
        cfg.quad.time_nodes = get_int(q, "quadrature.", "time_nodes", cfg.quad.time_nodes);
        cfg.quad.z_nodes = get_int(q, "quadrature.", "z_nodes", cfg.quad.z_nodes);
        cfg.quad.outer_nodes = get_int(q, "quadrature.", "outer_nodes", cfg.quad.outer_nodes);
        cfg.quad.check_tol = get_number(q, "quadrature.", "check_tol", cfg.quad.check_tol);
    }

    if (doc.contains("topography")) {
        const auto& t = doc["topography"];
        check_keys(t, "topography.", {"threshold_ratio", "margin"});
        cfg.topography.threshold_ratio =
            get_number(t, "topography.", "threshold_ratio", cfg.topography.threshold_ratio);
        cfg.topography.margin = get_number(t, "topography.", "margin", cfg.topography.margin);
    }

    if (doc.contains("stage2_init")) {
        const auto& s = doc["stage2_init"];
        if (!s.is_array() || s.size() != 5)
            throw ConfigError("stage2_init must be [x0, y0, z0, l, M]");
        cfg.stage2_init = CubicParams{s[0].get<double>(), s[1].get<double>(), s[2].get<double>(),
                                      s[3].get<double>(), s[4].get<double>()};
    }

    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    const json doc = parse_strict(in, path);
    return parse_config(doc, fs::path(path).parent_path().string());
}

json config_to_json(const RunConfig& cfg) {
    json doc;
    doc["medium"] = {{"mu_s_prime", cfg.mu_s_prime}, {"mu_a", cfg.mu_a}, {"n_rel", cfg.n_rel}};
    json irf = {{"kind", cfg.irf.is_delta ? "delta" : "sampled"}, {"tau", cfg.irf.tau}};
    if (!cfg.irf.is_delta) irf["path"] = cfg.irf.path;
    doc["irf"] = irf;
    if (std::holds_alternative<std::string>(cfg.layout)) {
        doc["layout"] = std::get<std::string>(cfg.layout);
    } else {
        json rows = json::array();
        for (const auto& p : std::get<std::vector<SourceDetectorPair>>(cfg.layout))
            rows.push_back({p.source.x, p.source.y, p.detector.x, p.detector.y});
        doc["layout"] = {{"pairs", rows}};
    }
    if (cfg.target) {
        if (std::holds_alternative<EllipsoidSpec>(*cfg.target)) {
            const auto& e = std::get<EllipsoidSpec>(*cfg.target);
            doc["target"] = {{"kind", "ellipsoid"},
                             {"center", {e.target.center.x, e.target.center.y, e.target.center.z}},
                             {"semiaxes",
                              {e.target.semiaxes.x, e.target.semiaxes.y, e.target.semiaxes.z}},
                             {"n_value", e.target.n_value},
                             {"spacing", e.spacing}};
        } else if (std::holds_alternative<Cuboid>(*cfg.target)) {
            const auto& c = std::get<Cuboid>(*cfg.target);
            doc["target"] = {{"kind", "cuboid"}, {"x1", c.x1}, {"x2", c.x2}, {"y1", c.y1},
                             {"y2", c.y2},       {"z1", c.z1}, {"z2", c.z2}, {"m", c.M}};
        } else {
            doc["target"] = {{"kind", "voxels"}, {"path", std::get<std::string>(*cfg.target)}};
        }
    }
    doc["time"] = {{"dt", cfg.time.dt},
                   {"n_bins", cfg.time.n_bins},
                   {"n_t", cfg.time.n_t},
                   {"peak_offset", cfg.time.peak_offset}};
    doc["noise"] = {{"level", cfg.noise.level}, {"seed", cfg.noise.seed}};
    doc["bounds"] = {{"lateral_min", cfg.bounds.lateral_min},
                     {"lateral_max", cfg.bounds.lateral_max},
                     {"z0_max", cfg.bounds.z0_max},
                     {"l_max", cfg.bounds.l_max},
                     {"m_max", cfg.bounds.m_max},
                     {"z_face_max", cfg.bounds.z_face_max},
                     {"z_eps", cfg.bounds.z_eps}};
    doc["lm"] = {{"lambda0", cfg.lm.lambda0},   {"lambda_up", cfg.lm.lambda_up},
                 {"lambda_down", cfg.lm.lambda_down}, {"max_iter", cfg.lm.max_iter},
                 {"gtol", cfg.lm.gtol},         {"ftol", cfg.lm.ftol},
                 {"xtol", cfg.lm.xtol},         {"fd_step", cfg.lm.fd_step}};
    doc["quadrature"] = {{"time_nodes", cfg.quad.time_nodes},
                         {"z_nodes", cfg.quad.z_nodes},
                         {"outer_nodes", cfg.quad.outer_nodes},
                         {"check_tol", cfg.quad.check_tol}};
    doc["topography"] = {{"threshold_ratio", cfg.topography.threshold_ratio},
                         {"margin", cfg.topography.margin}};
    if (cfg.stage2_init) {
        const auto& s = *cfg.stage2_init;
        doc["stage2_init"] = {s.x0, s.y0, s.z0, s.l, s.M};
    }
    doc["output_dir"] = cfg.output_dir;
    return doc;
}

void save_config(const RunConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << config_to_json(config).dump(2) << "\n";
}

void write_measurements(const MeasurementSet& set, const std::string& path) {
    set.validate();
    if (set.pairs.empty()) throw FormatError("write_measurements: empty set");
    const double dt = set.windows.front().dt;
    for (const auto& w : set.windows)
        if (w.dt != dt)
            throw FormatError("write_measurements: all pairs must share one time step");

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write measurement file: " + path);
    out << "# fdot measurements v1\n";
    out << "# medium mu_s_prime " << fmt17(set.medium.mu_s_prime) << " mu_a "
        << fmt17(set.medium.mu_a) << " n_rel " << fmt17(set.medium.n_rel) << "\n";
    if (set.irf.is_delta()) {
        out << "# irf delta tau " << fmt17(set.irf.tau) << "\n";
    } else {
        out << "# irf sampled dt " << fmt17(set.irf.dt) << " tau " << fmt17(set.irf.tau)
            << "\n# irf_samples";
        for (double v : set.irf.samples) out << " " << fmt17(v);
        out << "\n";
    }
    out << "# dt " << fmt17(dt) << "\n";
    for (const auto& p : set.pairs)
        out << "# pair " << p.index << " " << fmt17(p.source.x) << " " << fmt17(p.source.y) << " "
            << fmt17(p.detector.x) << " " << fmt17(p.detector.y) << "\n";
    for (size_t i = 0; i < set.pairs.size(); ++i)
        out << "# window " << set.pairs[i].index << " " << fmt17(set.windows[i].t0) << " "
            << set.windows[i].n_t << " " << set.windows[i].k0 << "\n";
    for (size_t i = 0; i < set.pairs.size(); ++i)
        for (int k = 1; k <= set.windows[i].n_t; ++k)
            out << set.pairs[i].index << " " << fmt17(set.windows[i].time_at(k)) << " "
                << fmt17(set.values[i][k - 1]) << "\n";
}

MeasurementSet read_measurements(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open measurement file: " + path);

    MeasurementSet set;
    set.irf = InstrumentResponse::delta();
    double dt = 0.0;
    bool have_medium = false;
    std::map<int, size_t> slot;                 // pair index -> position
    std::vector<bool> window_declared;
    std::vector<size_t> received;
    double irf_dt = 0.0, irf_tau = 0.0;
    bool irf_sampled = false;

    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        if (line[0] == '#') {
            std::string hash, tag;
            ss >> hash >> tag;
            if (tag == "medium") {
                std::string k1, k2, k3;
                double v1, v2, v3;
                if (!(ss >> k1 >> v1 >> k2 >> v2 >> k3 >> v3)) fail("malformed medium header");
                set.medium = derive_medium(v1, v2, v3);
                have_medium = true;
            } else if (tag == "irf") {
                std::string kind;
                ss >> kind;
                if (kind == "delta") {
                    std::string kw;
                    double tau = 0.0;
                    ss >> kw >> tau;
                    set.irf = InstrumentResponse::delta(tau);
                } else if (kind == "sampled") {
                    std::string kw1, kw2;
                    if (!(ss >> kw1 >> irf_dt >> kw2 >> irf_tau)) fail("malformed irf header");
                    irf_sampled = true;
                } else {
                    fail("unknown irf kind \"" + kind + "\"");
                }
            } else if (tag == "irf_samples") {
                std::vector<double> samples;
                double v;
                while (ss >> v) samples.push_back(v);
                if (!irf_sampled) fail("irf_samples without a sampled irf header");
                set.irf = InstrumentResponse::sampled(irf_dt, std::move(samples), irf_tau);
            } else if (tag == "dt") {
                if (!(ss >> dt) || dt <= 0.0) fail("malformed dt header");
            } else if (tag == "pair") {
                int index;
                double xs, ys, xd, yd;
                if (!(ss >> index >> xs >> ys >> xd >> yd)) fail("malformed pair header");
                if (slot.count(index)) fail("pair " + std::to_string(index) + " declared twice");
                slot[index] = set.pairs.size();
                set.pairs.push_back({{xs, ys}, {xd, yd}, index});
                set.windows.push_back(TimeWindow{0.0, 0.0, 0, 0});
                set.values.emplace_back();
                window_declared.push_back(false);
                received.push_back(0);
            } else if (tag == "window") {
                int index, n_t, k0;
                double t0;
                if (!(ss >> index >> t0 >> n_t >> k0)) fail("malformed window header");
                auto it = slot.find(index);
                if (it == slot.end()) fail("window for undeclared pair " + std::to_string(index));
                set.windows[it->second] = TimeWindow{t0, 0.0, n_t, k0};
                window_declared[it->second] = true;
            }
            // other comment lines are ignored
            continue;
        }
        int index;
        double t, v;
        if (!(std::istringstream(line) >> index >> t >> v)) fail("malformed data line");
        auto it = slot.find(index);
        if (it == slot.end()) fail("data for undeclared pair " + std::to_string(index));
        if (dt <= 0.0) fail("data before the dt header");
        const size_t i = it->second;
        const size_t k = received[i];
        if (!window_declared[i] && k == 0)
            set.windows[i].t0 = t;  // grid origin from the first sample
        const double expected = set.windows[i].t0 + static_cast<double>(k) * dt;
        if (std::abs(t - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
            fail("sample time " + fmt17(t) + " off the window grid (expected " + fmt17(expected) +
                 ")");
        if (v < 0.0 && warnings)
            warnings->push_back(path + ":" + std::to_string(line_no) + ": negative count " +
                                fmt17(v) + " retained");
        set.values[i].push_back(v);
        ++received[i];
    }

    if (set.pairs.empty()) throw FormatError(path + ": empty measurement file");
    if (!have_medium) throw FormatError(path + ": missing medium header");
    if (dt <= 0.0) throw FormatError(path + ": missing dt header");
    for (size_t i = 0; i < set.pairs.size(); ++i) {
        auto& w = set.windows[i];
        w.dt = dt;
        if (window_declared[i]) {
            if (received[i] != static_cast<size_t>(w.n_t))
                throw FormatError(path + ": pair " + std::to_string(set.pairs[i].index) + " has " +
                                  std::to_string(received[i]) + " samples, window declares " +
                                  std::to_string(w.n_t));
        } else {
            if (received[i] == 0)
                throw FormatError(path + ": pair " + std::to_string(set.pairs[i].index) +
                                  " has no samples");
            w.n_t = static_cast<int>(received[i]);
            const auto& series = set.values[i];
            w.k0 = static_cast<int>(std::max_element(series.begin(), series.end()) -
                                    series.begin()) +
                   1;
        }
    }
    set.validate();
    return set;
}

void write_voxel_field(const VoxelField& field, const std::string& path) {
    field.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write voxel file: " + path);
    out << "# fdot voxels v1\n";
    out << "# origin " << fmt17(field.origin.x) << " " << fmt17(field.origin.y) << " "
        << fmt17(field.origin.z) << "\n";
    out << "# spacing " << fmt17(field.spacing.x) << " " << fmt17(field.spacing.y) << " "
        << fmt17(field.spacing.z) << "\n";
    out << "# dims " << field.nx << " " << field.ny << " " << field.nz << "\n";
    for (double v : field.values) out << fmt17(v) << "\n";
}

VoxelField read_voxel_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open voxel file: " + path);
    VoxelField field;
    std::string line;
    int line_no = 0;
    bool have_dims = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        if (line[0] == '#') {
            std::string hash, tag;
            ss >> hash >> tag;
            if (tag == "origin") ss >> field.origin.x >> field.origin.y >> field.origin.z;
            else if (tag == "spacing") ss >> field.spacing.x >> field.spacing.y >> field.spacing.z;
            else if (tag == "dims") {
                ss >> field.nx >> field.ny >> field.nz;
                have_dims = true;
            }
            continue;
        }
        double v;
        if (!(ss >> v))
            throw FormatError(path + ":" + std::to_string(line_no) + ": malformed voxel value");
        field.values.push_back(v);
    }
    if (!have_dims) throw FormatError(path + ": missing dims header");
    field.validate();
    return field;
}

InstrumentResponse read_irf_profile(const std::string& path, double tau) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open IRF file: " + path);
    std::vector<double> times, weights;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double t, w;
        if (!(ss >> t >> w))
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected two columns");
        times.push_back(t);
        weights.push_back(w);
    }
    if (times.size() < 2) throw FormatError(path + ": need at least two IRF samples");
    const double dt = times[1] - times[0];
    if (dt <= 0.0 || std::abs(times[0]) > 1e-9 * dt)
        throw FormatError(path + ": IRF grid must start at 0 with positive spacing");
    for (size_t j = 1; j < times.size(); ++j)
        if (std::abs(times[j] - j * dt) > 1e-6 * dt)
            throw FormatError(path + ": IRF grid is not uniform at row " + std::to_string(j + 1));
    return InstrumentResponse::sampled(dt, std::move(weights), tau);
}

namespace {

json trace_to_json(const std::vector<TraceEntry>& trace) {
    json rows = json::array();
    for (const auto& e : trace)
        rows.push_back({{"objective", e.objective}, {"lambda", e.lambda}, {"accepted", e.accepted}});
    return rows;
}

json stage_to_json(const StageResult& stage) {
    json doc;
    if (std::holds_alternative<CubicParams>(stage.params)) {
        const auto& p = std::get<CubicParams>(stage.params);
        doc["params"] = {{"x0", p.x0}, {"y0", p.y0}, {"z0", p.z0}, {"l", p.l}, {"M", p.M}};
    } else {
        const auto& p = std::get<CuboidParams>(stage.params);
        doc["params"] = {{"x1", p.x1}, {"x2", p.x2}, {"y1", p.y1}, {"y2", p.y2},
                         {"z1", p.z1}, {"z2", p.z2}, {"M", p.M}};
    }
    doc["objective"] = stage.objective;
    doc["iterations"] = stage.iterations;
    doc["converged"] = stage.converged;
    doc["stop_reason"] = stage.stop_reason;
    doc["trace"] = trace_to_json(stage.trace);
    return doc;
}

}  // namespace

json result_to_json(const ResultRecord& record) {
    json doc;
    doc["version"] = record.version;
    doc["seed"] = record.seed;
    doc["config"] = record.config_echo;
    doc["gamma"] = {{"x_min", record.gamma.x_min},
                    {"x_max", record.gamma.x_max},
                    {"y_min", record.gamma.y_min},
                    {"y_max", record.gamma.y_max}};
    doc["integrals"] = record.integrals;
    doc["cubic"] = stage_to_json(record.cubic);
    doc["cuboid"] = stage_to_json(record.cuboid);
    return doc;
}

void write_result(const ResultRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write result file: " + path);
    out << result_to_json(record).dump(2) << "\n";
}

void write_timings(const std::vector<std::pair<std::string, double>>& timings_ms,
                   const std::string& path) {
    json doc;
    for (const auto& [name, ms] : timings_ms) doc[name] = ms;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write timings file: " + path);
    out << doc.dump(2) << "\n";
}

namespace {

struct SectionEllipse {
    double cu = 0.0, cv = 0.0;  // center in the section plane
    double su = 0.0, sv = 0.0;  // semi-axes in the section plane
    bool present = false;
};

// Intersection of the ellipsoid with an axis plane at `offset` from the
// center along the dropped axis; axes scale by sqrt(1 - (offset/semi)^2).
SectionEllipse section(double offset, double semi_drop, double cu, double cv, double su,
                       double sv) {
    SectionEllipse e;
    const double q = 1.0 - (offset / semi_drop) * (offset / semi_drop);
    if (q <= 0.0) return e;
    e.present = true;
    e.cu = cu;
    e.cv = cv;
    e.su = su * std::sqrt(q);
    e.sv = sv * std::sqrt(q);
    return e;
}

void write_section_csv(const std::string& path, const std::string& plane_note, bool converged,
                       const char* u_name, const char* v_name, double u1, double u2, double v1,
                       double v2, const SectionEllipse& truth) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write section file: " + path);
    out << "# fdot cross-section v1\n";
    out << "# plane " << plane_note << "\n";
    out << "# converged " << (converged ? "true" : "false") << "\n";
    out << "cuboid_" << u_name << ",cuboid_" << v_name;
    if (truth.present) out << ",truth_" << u_name << ",truth_" << v_name;
    out << "\n";

    // closed rectangle outline, then the ellipse sampled at 256 points
    const double rect_u[5] = {u1, u2, u2, u1, u1};
    const double rect_v[5] = {v1, v1, v2, v2, v1};
    const int n_ellipse = truth.present ? 256 : 0;
    const int rows = std::max(5, n_ellipse);
    for (int r = 0; r < rows; ++r) {
        if (r < 5) out << fmt17(rect_u[r]) << "," << fmt17(rect_v[r]);
        else out << ",";
        if (truth.present) {
            if (r < n_ellipse) {
                const double theta = 2.0 * std::numbers::pi * r / (n_ellipse - 1);
                out << "," << fmt17(truth.cu + truth.su * std::cos(theta)) << ","
                    << fmt17(truth.cv + truth.sv * std::sin(theta));
            } else {
                out << ",,";
            }
        }
        out << "\n";
    }
}

}  // namespace

void emit_cross_sections(const CuboidParams& cuboid, bool converged,
                         const std::optional<EllipsoidTarget>& truth,
                         const std::string& out_dir) {
    fs::create_directories(out_dir);
    const double x_mid = 0.5 * (cuboid.x1 + cuboid.x2);
    const double y_mid = 0.5 * (cuboid.y1 + cuboid.y2);
    const double z_mid = 0.5 * (cuboid.z1 + cuboid.z2);

    SectionEllipse ez, exz, eyz;
    if (truth) {
        const auto& e = *truth;
        ez = section(z_mid - e.center.z, e.semiaxes.z, e.center.x, e.center.y, e.semiaxes.x,
                     e.semiaxes.y);
        exz = section(y_mid - e.center.y, e.semiaxes.y, e.center.x, e.center.z, e.semiaxes.x,
                      e.semiaxes.z);
        eyz = section(x_mid - e.center.x, e.semiaxes.x, e.center.y, e.center.z, e.semiaxes.y,
                      e.semiaxes.z);
    }
    write_section_csv((fs::path(out_dir) / "section_z.csv").string(), "z = " + fmt17(z_mid),
                      converged, "x", "y", cuboid.x1, cuboid.x2, cuboid.y1, cuboid.y2, ez);
    write_section_csv((fs::path(out_dir) / "section_xz.csv").string(), "y = " + fmt17(y_mid),
                      converged, "x", "z", cuboid.x1, cuboid.x2, cuboid.z1, cuboid.z2, exz);
    write_section_csv((fs::path(out_dir) / "section_yz.csv").string(), "x = " + fmt17(x_mid),
                      converged, "y", "z", cuboid.y1, cuboid.y2, cuboid.z1, cuboid.z2, eyz);
}

}  // namespace fdot
