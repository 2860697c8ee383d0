#include "softrl/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace softrl::config {

const std::vector<KeySpec>& RunConfig::schema() {
    static const std::vector<KeySpec> specs = {
        {"run.seed", "0", "root seed; every random stream derives from it"},

        {"plant.length_rest", "70.0", "rest length of the body, mm"},
        {"plant.radius", "7.5", "body radius, mm"},
        {"plant.chamber_offset", "4.5", "radial distance of each chamber axis, mm"},
        {"plant.elong_gain", "0.1", "elongation per summed pressure, mm/kPa"},
        {"plant.bend_gain", "0.00025", "curvature per differential pressure, 1/(mm*kPa)"},
        {"plant.pressure_min", "0.0", "lower chamber pressure bound, kPa"},
        {"plant.pressure_max", "60.0", "upper chamber pressure bound, kPa"},
        {"plant.noise_sigma", "0.0", "additive key-point sensor noise, mm"},
        {"plant.n_keys", "5", "number of key feature points including the base"},
        {"plant.hysteresis_halfwidth", "-1",
         "play-operator half-width, kPa; negative means calibrate to hysteresis_target"},
        {"plant.hysteresis_target", "0.034",
         "up/down tip deviation target as a fraction of rest length"},

        {"dataset.steps_per_axis", "24", "pressure grid resolution per chamber"},
        {"dataset.val_count", "1000", "validation samples from an independent monotone-run sweep"},
        {"dataset.test_count", "1000", "test samples from an independent monotone-run sweep"},
        {"dataset.avg_reads", "20", "sensor reads averaged per sample"},

        {"model.hidden_layers", "4", "hidden layer count"},
        {"model.hidden_width", "128", "units per hidden layer"},
        {"model.activation", "relu", "hidden activation: relu | tanh"},
        {"model.learning_rate", "0.001", "optimizer step size"},
        {"model.batch_size", "256", "minibatch size"},
        {"model.max_epochs", "300", "epoch cap"},
        {"model.eval_every", "10", "validation cadence, epochs"},
        {"model.patience", "10", "evaluations without improvement before stopping"},
        {"model.input_mode", "6d", "6d = pressures+directions, 3d = pressures only"},

        {"ablation.max_epochs", "120", "epoch cap for each ablation training"},
        {"ablation.eval_every", "5",
         "validation cadence inside the ablation; plateaued baselines stop sooner"},
        {"ablation.threads", "0", "concurrent trainings in the sweep; 0 picks the hardware count"},

        {"ppo.gamma", "0.99", "discount factor"},
        {"ppo.gae_lambda", "0.95", "GAE decay"},
        {"ppo.entropy_coef", "0.01", "entropy bonus coefficient"},
        {"ppo.clip_range", "0.2", "surrogate clip epsilon"},
        {"ppo.value_coef", "0.5", "value loss coefficient"},
        {"ppo.learning_rate", "0.0003", "optimizer step size"},
        {"ppo.n_envs", "64", "parallel environments"},
        {"ppo.steps_per_env", "64", "steps per env per update (batch = n_envs * steps)"},
        {"ppo.epochs", "10", "optimization epochs per update"},
        {"ppo.minibatch", "256", "minibatch size"},
        {"ppo.total_steps", "2000000", "total environment steps"},
        {"ppo.eval_every_updates", "10", "deterministic evaluation cadence, updates"},
        {"ppo.log_std_init", "0.0", "initial log standard deviation of the action head"},
        {"ppo.kl_abort", "0.35", "approximate-KL divergence abort threshold"},
        {"ppo.kl_abort_consecutive", "5", "consecutive high-KL updates before aborting"},
        {"ppo.env_threads", "2", "threads stepping the vectorized environments"},

        {"task.kind", "circle", "circle | square | laser-circle | laser-square"},
        {"task.size_frac", "0.5",
         "circle radius / square side as a fraction of the tip workspace XY radius"},
        {"task.center_x", "0.0", "task center x, mm"},
        {"task.center_y", "0.0", "task center y, mm"},
        {"task.z", "nan", "tracking plane height, mm; nan picks the workspace ring height"},
        {"task.waypoints", "40", "waypoints along the trajectory"},
        {"task.dwell", "10", "steps spent on each waypoint"},
        {"task.episode_len", "400", "steps per episode"},
        {"task.error_mode", "tip", "tip | whole-body"},
        {"task.plane_z", "120.0", "laser target plane height, mm"},

        {"actuation.kp", "0.8", "proportional gain"},
        {"actuation.ki", "0.1", "integral gain"},
        {"actuation.kd", "0.2", "derivative gain"},
        {"actuation.integral_clamp", "0.5", "anti-windup bound, kPa*s"},
        {"actuation.output_clamp", "4.0", "motor speed command bound"},
        {"actuation.deriv_filter", "0.2", "derivative low-pass coefficient, (0, 1]"},
        {"actuation.speed_gain", "8.0", "pressure rate per speed unit, kPa/s"},
        {"actuation.rate_max", "10.0", "pressure slew limit, kPa/s"},
        {"actuation.inner_hz", "50", "deploy-mode control loop rate, Hz"},
        {"actuation.step_period", "2.0", "deploy-mode env step duration, s"},

        {"env.rest_p1", "0.0", "reset pressure, chamber 1, kPa"},
        {"env.rest_p2", "0.0", "reset pressure, chamber 2, kPa"},
        {"env.rest_p3", "0.0", "reset pressure, chamber 3, kPa"},
        {"env.action_bound", "3.0", "per-step pressure change bound, kPa"},
        {"env.reward_scale", "1.0",
         "length scale (mm) of the tracking reward exp(-error/scale)"},
    };
    return specs;
}

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    for (const auto& spec : schema()) cfg.values_[spec.key] = spec.default_value;
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg = defaults();
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(str_printf("%s:%zu: malformed section", path.c_str(), line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(str_printf("%s:%zu: expected key = value", path.c_str(), line_no));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        cfg.set(key, value);
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw ConfigError("unknown config key: " + key);
    values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("config key " + key + " is not a number: " + s);
    return v;
}

long long RunConfig::get_int(const std::string& key) const {
    const std::string& s = get(key);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("config key " + key + " is not an integer: " + s);
    return v;
}

std::size_t RunConfig::get_size(const std::string& key) const {
    long long v = get_int(key);
    if (v < 0) throw ConfigError("config key " + key + " must be non-negative");
    return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& s = get(key);
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("config key " + key + " is not an unsigned integer: " + s);
    return v;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config key " + key + " is not a boolean: " + s);
}

std::string RunConfig::canonical_string() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << "=" << v << "\n";
    return out.str();
}

std::string RunConfig::documented_defaults() {
    std::ostringstream out;
    std::string section;
    for (const auto& spec : schema()) {
        std::string sec = spec.key.substr(0, spec.key.find('.'));
        if (sec != section) {
            out << (section.empty() ? "" : "\n") << "[" << sec << "]\n";
            section = sec;
        }
        out << spec.key.substr(sec.size() + 1) << " = " << spec.default_value << "  # "
            << spec.doc << "\n";
    }
    return out.str();
}

}  // namespace softrl::config
