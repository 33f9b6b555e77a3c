#include <occtrack/config.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace occtrack {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

namespace config_detail {

double to_double(const std::string &key, const std::string &v) {
    double out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw Error(ErrorCode::ParseError, "key '" + key + "': expected a number, got '" + v + "'");
    }
    return out;
}

int to_int(const std::string &key, const std::string &v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw Error(ErrorCode::ParseError, "key '" + key + "': expected an integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string &key, const std::string &v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") {
        return true;
    }
    if (v == "0" || v == "false" || v == "off" || v == "no") {
        return false;
    }
    throw Error(ErrorCode::ParseError, "key '" + key + "': expected a boolean, got '" + v + "'");
}

} // namespace config_detail

ConfigMap parse_config(const std::string &text) {
    ConfigMap out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": empty key or value");
        }
        out[key] = value;
    }
    return out;
}

ConfigMap read_config_file(const std::filesystem::path &path) {
    std::ifstream f(path);
    if (!f) {
        throw Error(ErrorCode::IoError, "cannot open config file " + path.string());
    }
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const Error &e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

ScaleMode parse_scale_mode(const std::string &s) {
    if (s == "fused") return ScaleMode::Fused;
    if (s == "pyramid") return ScaleMode::PyramidOnly;
    if (s == "logpolar") return ScaleMode::LogPolarOnly;
    if (s == "off") return ScaleMode::Off;
    throw Error(ErrorCode::ParseError, "unknown scale_mode '" + s + "'");
}

std::string_view to_string(ScaleMode m) {
    switch (m) {
    case ScaleMode::Fused: return "fused";
    case ScaleMode::PyramidOnly: return "pyramid";
    case ScaleMode::LogPolarOnly: return "logpolar";
    case ScaleMode::Off: return "off";
    }
    return "?";
}

TrackerConfig tracker_config_from(const ConfigMap &kv, TrackerConfig c) {
    using namespace config_detail;
    using Setter = std::function<void(const std::string &, const std::string &)>;
    auto real = [](double &dst) -> Setter { return [&dst](const auto &k, const auto &v) { dst = to_double(k, v); }; };
    auto integer = [](int &dst) -> Setter { return [&dst](const auto &k, const auto &v) { dst = to_int(k, v); }; };
    auto flag = [](bool &dst) -> Setter { return [&dst](const auto &k, const auto &v) { dst = to_bool(k, v); }; };

    const std::map<std::string, Setter> setters = {
        {"alpha", real(c.quality.alpha)},
        {"beta", real(c.quality.beta)},
        {"phi", real(c.quality.phi)},
        {"n_q", integer(c.quality.n_q)},
        {"exclusion_radius", integer(c.quality.exclusion_radius)},
        {"alpha_d", real(c.alpha_d)},
        {"eta", real(c.eta)},
        {"theta", real(c.scale.theta)},
        {"scale_step", real(c.scale.scale_step)},
        {"n_scales", integer(c.scale.n_scales)},
        {"logpolar_rows", integer(c.scale.logpolar_rows)},
        {"logpolar_cols", integer(c.scale.logpolar_cols)},
        {"logpolar_patch", integer(c.scale.logpolar_patch)},
        {"logpolar_padding", real(c.scale.logpolar_padding)},
        {"logpolar_min_confidence", real(c.scale.min_confidence)},
        {"logpolar_iterations", integer(c.scale.logpolar_iterations)},
        {"fusion_tolerance", real(c.scale.fusion_tolerance)},
        {"scale_clamp_min", real(c.scale.clamp_min)},
        {"scale_clamp_max", real(c.scale.clamp_max)},
        {"scale_model_area", real(c.scale.model_max_area)},
        {"scale_learning_rate", real(c.scale.learning_rate)},
        {"scale_mode", [&c](const auto &, const auto &v) { c.scale.mode = parse_scale_mode(v); }},
        {"hog_cell", [&c](const auto &k, const auto &v) { c.features.cell_size = c.scale.cell_size = to_int(k, v); }},
        {"hog_bins", integer(c.features.hog_bins)},
        {"color_names", flag(c.features.use_color_names)},
        {"center_features", flag(c.features.center_channels)},
        {"padding", real(c.padding)},
        {"template_side", real(c.template_side)},
        {"label_sigma_factor", real(c.label_sigma_factor)},
        {"use_mask", flag(c.use_mask)},
        {"mask_hist_bins", integer(c.mask.hist_bins)},
        {"mask_min_area", real(c.mask.min_area_fraction)},
        {"admm_lambda", real(c.admm.lambda_reg)},
        {"admm_mu0", real(c.admm.mu0)},
        {"admm_mu_scale", real(c.admm.mu_scale)},
        {"admm_mu_max", real(c.admm.mu_max)},
        {"admm_init_iterations", integer(c.admm.iterations)},
        {"admm_update_iterations", integer(c.update_iterations)},
        {"occlusion_handling", flag(c.occlusion_handling)},
        {"redetect", flag(c.redetect)},
        {"redetect_after", integer(c.redetect_after)},
        {"redetect_factor", real(c.redetect_factor)},
    };
    for (const auto &[key, value] : kv) {
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'");
        }
        it->second(key, value);
    }
    c.validate();
    return c;
}

TrackerConfig load_tracker_config(const std::filesystem::path &path) {
    return tracker_config_from(read_config_file(path));
}

namespace {

/// Shortest text that reads back to the same value.
std::string num(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace

std::string to_config_text(const TrackerConfig &c) {
    std::ostringstream o;
    o << "# quality measure\n"
      << "alpha=" << num(c.quality.alpha) << "  # alpha\n"
      << "beta=" << num(c.quality.beta) << "  # beta\n"
      << "phi=" << num(c.quality.phi) << "  # phi, sudden-drop threshold\n"
      << "n_q=" << num(c.quality.n_q) << "  # N_q, history length\n"
      << "exclusion_radius=" << num(c.quality.exclusion_radius) << "\n"
      << "# filter updates\n"
      << "eta=" << num(c.eta) << "  # eta, tracking-filter learning rate\n"
      << "alpha_d=" << num(c.alpha_d) << "  # alpha_d, occlusion-filter mixing\n"
      << "# scale\n"
      << "theta=" << num(c.scale.theta) << "  # theta, pyramid weight in the fused scale\n"
      << "scale_step=" << num(c.scale.scale_step) << "  # l_r\n"
      << "n_scales=" << num(c.scale.n_scales) << "\n"
      << "scale_mode=" << to_string(c.scale.mode) << "\n"
      << "logpolar_rows=" << num(c.scale.logpolar_rows) << "  # M\n"
      << "logpolar_cols=" << num(c.scale.logpolar_cols) << "  # N\n"
      << "logpolar_patch=" << num(c.scale.logpolar_patch) << "\n"
      << "logpolar_padding=" << num(c.scale.logpolar_padding) << "\n"
      << "logpolar_min_confidence=" << num(c.scale.min_confidence) << "\n"
      << "logpolar_iterations=" << num(c.scale.logpolar_iterations) << "\n"
      << "fusion_tolerance=" << num(c.scale.fusion_tolerance) << "  # max |ln(S_p/S_d)| in pyramid steps\n"
      << "scale_clamp_min=" << num(c.scale.clamp_min) << "\n"
      << "scale_clamp_max=" << num(c.scale.clamp_max) << "\n"
      << "scale_model_area=" << num(c.scale.model_max_area) << "\n"
      << "scale_learning_rate=" << num(c.scale.learning_rate) << "\n"
      << "# features\n"
      << "hog_cell=" << num(c.features.cell_size) << "  # HOG cell size\n"
      << "hog_bins=" << num(c.features.hog_bins) << "\n"
      << "color_names=" << (c.features.use_color_names ? 1 : 0) << "\n"
      << "center_features=" << (c.features.center_channels ? 1 : 0) << "\n"
      << "# geometry and filter learning\n"
      << "padding=" << num(c.padding) << "\n"
      << "template_side=" << num(c.template_side) << "\n"
      << "label_sigma_factor=" << num(c.label_sigma_factor) << "\n"
      << "use_mask=" << (c.use_mask ? 1 : 0) << "\n"
      << "mask_hist_bins=" << num(c.mask.hist_bins) << "\n"
      << "mask_min_area=" << num(c.mask.min_area_fraction) << "\n"
      << "admm_lambda=" << num(c.admm.lambda_reg) << "  # lambda\n"
      << "admm_mu0=" << num(c.admm.mu0) << "\n"
      << "admm_mu_scale=" << num(c.admm.mu_scale) << "\n"
      << "admm_mu_max=" << num(c.admm.mu_max) << "\n"
      << "admm_init_iterations=" << num(c.admm.iterations) << "\n"
      << "admm_update_iterations=" << num(c.update_iterations) << "\n"
      << "# occlusion handling\n"
      << "occlusion_handling=" << (c.occlusion_handling ? 1 : 0) << "\n"
      << "redetect=" << (c.redetect ? 1 : 0) << "\n"
      << "redetect_after=" << num(c.redetect_after) << "\n"
      << "redetect_factor=" << num(c.redetect_factor) << "\n";
    return o.str();
}

} // namespace occtrack
