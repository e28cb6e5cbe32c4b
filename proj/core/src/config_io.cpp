#include "semstyle/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace semstyle {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: cannot parse value '" + v + "' for key '" + key + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return i;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: cannot parse integer '" + v + "' for key '" + key + "'");
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void apply_config_entry(TrainRunConfig& c, const std::string& key, const std::string& value) {
    if (key == "mode") {
        if (value == "baseline")
            c.mode = RunMode::Baseline;
        else if (value == "semantic")
            c.mode = RunMode::SemanticAware;
        else
            throw std::invalid_argument("config: mode must be 'baseline' or 'semantic', got '" + value + "'");
    } else if (key == "seed") {
        c.seed = parse_int(key, value);
    } else if (key == "iterations") {
        c.iterations = static_cast<int>(parse_int(key, value));
    } else if (key == "initial_lr") {
        c.initial_lr = parse_double(key, value);
    } else if (key == "lr_halving_period") {
        c.lr_halving_period = static_cast<int>(parse_int(key, value));
    } else if (key == "distortion_degree") {
        c.distortion_degree = parse_double(key, value);
    } else if (key == "contrast_factor") {
        c.contrast_factor = parse_double(key, value);
    } else if (key == "loss_weights.lambda_d") {
        c.loss_weights.lambda_d = parse_double(key, value);
    } else if (key == "loss_weights.lambda_p") {
        c.loss_weights.lambda_p = parse_double(key, value);
    } else if (key == "loss_weights.lambda_c") {
        c.loss_weights.lambda_c = parse_double(key, value);
    } else if (key == "loss_weights.lambda_tv") {
        c.loss_weights.lambda_tv = parse_double(key, value);
    } else if (key == "thresholds.tau_portrait") {
        c.thresholds.tau_portrait = parse_double(key, value);
    } else if (key == "thresholds.tau_back") {
        c.thresholds.tau_back = parse_double(key, value);
    } else if (key == "penalties.alpha_portrait") {
        c.penalties.alpha_portrait = parse_double(key, value);
    } else if (key == "penalties.alpha_back") {
        c.penalties.alpha_back = parse_double(key, value);
    } else if (key == "sampler.n_patches") {
        c.sampler.n_patches = static_cast<int>(parse_int(key, value));
    } else if (key == "sampler.patch_size") {
        c.sampler.patch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "sampler.portrait_quota") {
        c.sampler.portrait_quota = static_cast<int>(parse_int(key, value));
    } else if (key == "sampler.membership_region") {
        c.sampler.membership_region = static_cast<int>(parse_int(key, value));
    } else if (key == "sampler.membership_threshold") {
        c.sampler.membership_threshold = parse_double(key, value);
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

TrainRunConfig parse_config_text(const std::string& text, const TrainRunConfig& base) {
    TrainRunConfig c = base;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not 'key = value'");
        apply_config_entry(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return c;
}

TrainRunConfig load_config_file(const std::string& path, const TrainRunConfig& base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), base);
}

std::string config_to_text(const TrainRunConfig& c) {
    std::ostringstream os;
    os << "mode = " << to_string(c.mode) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "iterations = " << c.iterations << "\n";
    os << "initial_lr = " << fmt(c.initial_lr) << "\n";
    os << "lr_halving_period = " << c.lr_halving_period << "\n";
    os << "distortion_degree = " << fmt(c.distortion_degree) << "\n";
    os << "contrast_factor = " << fmt(c.contrast_factor) << "\n";
    os << "loss_weights.lambda_d = " << fmt(c.loss_weights.lambda_d) << "\n";
    os << "loss_weights.lambda_p = " << fmt(c.loss_weights.lambda_p) << "\n";
    os << "loss_weights.lambda_c = " << fmt(c.loss_weights.lambda_c) << "\n";
    os << "loss_weights.lambda_tv = " << fmt(c.loss_weights.lambda_tv) << "\n";
    os << "thresholds.tau_portrait = " << fmt(c.thresholds.tau_portrait) << "\n";
    os << "thresholds.tau_back = " << fmt(c.thresholds.tau_back) << "\n";
    os << "penalties.alpha_portrait = " << fmt(c.penalties.alpha_portrait) << "\n";
    os << "penalties.alpha_back = " << fmt(c.penalties.alpha_back) << "\n";
    os << "sampler.n_patches = " << c.sampler.n_patches << "\n";
    os << "sampler.patch_size = " << c.sampler.patch_size << "\n";
    os << "sampler.portrait_quota = " << c.sampler.portrait_quota << "\n";
    os << "sampler.membership_region = " << c.sampler.membership_region << "\n";
    os << "sampler.membership_threshold = " << fmt(c.sampler.membership_threshold) << "\n";
    return os.str();
}

void save_config_file(const std::string& path, const TrainRunConfig& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
    out << config_to_text(config);
}

}  // namespace semstyle
