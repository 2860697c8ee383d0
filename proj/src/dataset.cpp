#include "softrl/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace softrl::dataset {

std::vector<Pressures> generate_sweep(const SweepPlan& plan, double p_min, double p_max) {
    const std::size_t s = plan.steps_per_axis;
    if (s < 2) throw ConfigError("sweep: steps_per_axis must be >= 2");
    auto level = [&](std::size_t i) {
        return p_min + (p_max - p_min) * static_cast<double>(i) / static_cast<double>(s - 1);
    };

    // Chamber 1 zigzags fastest; chambers 2 and 3 walk an inward rectangular
    // spiral over their grid. A plain nested boustrophedon would never let the
    // slowest chamber descend, so one direction label per chamber would be
    // missing from the training set; the spiral visits every (p2, p3) cell
    // once while moving in all four directions.
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    cells.reserve(s * s);
    std::size_t lo1 = 0, hi1 = s - 1, lo2 = 0, hi2 = s - 1;
    while (lo1 <= hi1 && lo2 <= hi2) {
        for (std::size_t i = lo1; i <= hi1; ++i) cells.emplace_back(i, lo2);
        for (std::size_t j = lo2 + 1; j <= hi2; ++j) cells.emplace_back(hi1, j);
        if (lo1 < hi1 && lo2 < hi2) {
            for (std::size_t i = hi1; i-- > lo1;) cells.emplace_back(i, hi2);
            for (std::size_t j = hi2; j-- > lo2 + 1;) cells.emplace_back(lo1, j);
        }
        ++lo1;
        ++lo2;
        if (hi1 == 0 || hi2 == 0) break;
        --hi1;
        --hi2;
    }

    std::vector<Pressures> targets;
    targets.reserve(s * s * s);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        bool rev = (c % 2) != 0;
        for (std::size_t j = 0; j < s; ++j) {
            std::size_t i0 = rev ? s - 1 - j : j;
            targets.push_back({level(i0), level(cells[c].first), level(cells[c].second)});
        }
    }
    return targets;
}

std::vector<Pressures> generate_monotone_runs(std::size_t steps_per_axis, std::size_t count,
                                              double p_min, double p_max, std::uint64_t seed) {
    const std::size_t s = steps_per_axis;
    if (s < 2) throw ConfigError("sweep: steps_per_axis must be >= 2");
    auto level = [&](std::size_t i) {
        return p_min + (p_max - p_min) * static_cast<double>(i) / static_cast<double>(s - 1);
    };
    Rng rng(derive_seed(seed, 0x72756e73ULL));
    std::uniform_int_distribution<std::size_t> axis_dist(0, 2);
    std::uniform_int_distribution<std::size_t> start_dist(0, s - 1);
    std::uniform_int_distribution<std::size_t> len_dist(1, s - 1);
    std::uniform_int_distribution<int> dir_dist(0, 1);

    std::array<std::size_t, 3> idx{start_dist(rng), start_dist(rng), start_dist(rng)};
    std::vector<Pressures> targets;
    targets.reserve(count);
    targets.push_back({level(idx[0]), level(idx[1]), level(idx[2])});
    while (targets.size() < count) {
        std::size_t axis = axis_dist(rng);
        int dir = dir_dist(rng) == 0 ? -1 : 1;
        if (idx[axis] == 0) dir = 1;
        if (idx[axis] == s - 1) dir = -1;
        std::size_t len = len_dist(rng);
        for (std::size_t k = 0; k < len && targets.size() < count; ++k) {
            if (dir > 0 && idx[axis] == s - 1) break;
            if (dir < 0 && idx[axis] == 0) break;
            idx[axis] = dir > 0 ? idx[axis] + 1 : idx[axis] - 1;
            targets.push_back({level(idx[0]), level(idx[1]), level(idx[2])});
        }
    }
    return targets;
}

std::vector<Sample> collect(Plant& plant, const std::vector<Pressures>& targets,
                            std::size_t avg_reads) {
    std::vector<Sample> samples;
    samples.reserve(targets.size());
    std::array<int, 3> prev_d{1, 1, 1};
    Pressures prev_p{};
    bool first = true;
    for (const auto& target : targets) {
        Sample sample;
        sample.p = target;
        for (std::size_t i = 0; i < 3; ++i) {
            if (first) {
                sample.d[i] = 1;
            } else {
                double delta = target[i] - prev_p[i];
                sample.d[i] = delta > 0 ? 1 : (delta < 0 ? -1 : prev_d[i]);
            }
        }
        auto keys = plant.eval_averaged(target, avg_reads);
        sample.y.reserve(keys.size() * 3);
        for (const auto& pt : keys) {
            sample.y.push_back(pt.x);
            sample.y.push_back(pt.y);
            sample.y.push_back(pt.z);
        }
        prev_p = target;
        prev_d = sample.d;
        first = false;
        samples.push_back(std::move(sample));
    }
    return samples;
}

DatasetBundle generate_dataset(const PlantParams& params, const SweepPlan& plan,
                               std::size_t val_count, std::size_t test_count,
                               std::uint64_t seed, std::size_t avg_reads) {
    DatasetBundle bundle;
    bundle.calibrated_halfwidth = params.hysteresis_halfwidth;

    auto train_targets = generate_sweep(plan, params.pressure_min, params.pressure_max);
    Plant train_plant(params, derive_seed(seed, 1));
    bundle.train = collect(train_plant, train_targets, avg_reads);

    auto val_targets = generate_monotone_runs(plan.steps_per_axis, val_count,
                                              params.pressure_min, params.pressure_max,
                                              derive_seed(seed, 2));
    Plant val_plant(params, derive_seed(seed, 3));
    bundle.val = collect(val_plant, val_targets, avg_reads);

    auto test_targets = generate_monotone_runs(plan.steps_per_axis, test_count,
                                               params.pressure_min, params.pressure_max,
                                               derive_seed(seed, 4));
    Plant test_plant(params, derive_seed(seed, 5));
    bundle.test = collect(test_plant, test_targets, avg_reads);
    return bundle;
}

void save_samples(const std::vector<Sample>& samples, const std::string& path) {
    if (samples.empty()) throw IoError("refusing to save empty sample list: " + path);
    const std::size_t n_keys = samples.front().y.size() / 3;
    std::ostringstream out;
    out << "p1,p2,p3,d1,d2,d3";
    for (std::size_t k = 1; k <= n_keys; ++k)
        out << ",x" << k << ",y" << k << ",z" << k;
    out << "\n";
    for (const auto& s : samples) {
        out << fmt_double(s.p[0]) << ',' << fmt_double(s.p[1]) << ',' << fmt_double(s.p[2]);
        for (int d : s.d) out << ',' << d;
        for (double v : s.y) out << ',' << fmt_double(v);
        out << "\n";
    }
    write_text_file(path, out.str());
}

std::vector<Sample> load_samples(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError("empty dataset file: " + path);
    std::vector<Sample> samples;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() < 7 || (fields.size() - 6) % 3 != 0)
            throw IoError(str_printf("%s:%zu: malformed row", path.c_str(), line_no));
        Sample s;
        auto parse = [&](const std::string& str) {
            double v = 0.0;
            auto res = std::from_chars(str.data(), str.data() + str.size(), v);
            if (res.ec != std::errc())
                throw IoError(str_printf("%s:%zu: bad number '%s'", path.c_str(), line_no,
                                         str.c_str()));
            return v;
        };
        for (std::size_t i = 0; i < 3; ++i) s.p[i] = parse(fields[i]);
        for (std::size_t i = 0; i < 3; ++i) {
            double d = parse(fields[3 + i]);
            if (d != 1.0 && d != -1.0)
                throw IoError(str_printf("%s:%zu: direction must be +-1", path.c_str(), line_no));
            s.d[i] = static_cast<int>(d);
        }
        s.y.reserve(fields.size() - 6);
        for (std::size_t i = 6; i < fields.size(); ++i) s.y.push_back(parse(fields[i]));
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_dataset(const DatasetBundle& bundle, const PlantParams& params,
                  const SweepPlan& plan, std::uint64_t seed, const std::string& stem) {
    save_samples(bundle.train, stem + ".train.csv");
    save_samples(bundle.val, stem + ".val.csv");
    save_samples(bundle.test, stem + ".test.csv");

    nlohmann::ordered_json meta;
    meta["plant"] = {{"length_rest_mm", params.length_rest},
                     {"radius_mm", params.radius},
                     {"chamber_offset_mm", params.chamber_offset},
                     {"elong_gain_mm_per_kpa", params.elong_gain},
                     {"bend_gain_per_mm_kpa", params.bend_gain},
                     {"hysteresis_halfwidth_kpa", params.hysteresis_halfwidth},
                     {"n_keys", params.n_keys},
                     {"pressure_min_kpa", params.pressure_min},
                     {"pressure_max_kpa", params.pressure_max},
                     {"noise_sigma_mm", params.noise_sigma}};
    meta["sweep"] = {{"steps_per_axis", plan.steps_per_axis},
                     {"ordering", plan.ordering == SweepOrdering::Snake
                                      ? "snake"
                                      : "randomized-monotone-runs"}};
    meta["seed"] = seed;
    meta["counts"] = {{"train", bundle.train.size()},
                      {"val", bundle.val.size()},
                      {"test", bundle.test.size()}};
    meta["note"] = "plant gains and pressure range are synthetic-plant constants, "
                   "not measured values";
    write_text_file(stem + ".meta.json", meta.dump(2) + "\n");
}

static DataMatrix build_matrix(const std::vector<Sample>& samples, std::size_t cols,
                               const std::function<void(const Sample&, double*)>& fill) {
    DataMatrix m;
    m.rows = samples.size();
    m.cols = cols;
    m.a.resize(m.rows * m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) fill(samples[r], &m.a[r * cols]);
    return m;
}

DataMatrix inputs_6d(const std::vector<Sample>& samples) {
    return build_matrix(samples, 6, [](const Sample& s, double* row) {
        row[0] = s.p[0];
        row[1] = s.p[1];
        row[2] = s.p[2];
        row[3] = s.d[0];
        row[4] = s.d[1];
        row[5] = s.d[2];
    });
}

DataMatrix inputs_3d(const std::vector<Sample>& samples) {
    return build_matrix(samples, 3, [](const Sample& s, double* row) {
        row[0] = s.p[0];
        row[1] = s.p[1];
        row[2] = s.p[2];
    });
}

DataMatrix targets(const std::vector<Sample>& samples) {
    if (samples.empty()) return {};
    const std::size_t cols = samples.front().y.size();
    return build_matrix(samples, cols, [cols](const Sample& s, double* row) {
        if (s.y.size() != cols) throw DimensionError("inconsistent target widths in sample list");
        for (std::size_t i = 0; i < cols; ++i) row[i] = s.y[i];
    });
}

}  // namespace softrl::dataset
