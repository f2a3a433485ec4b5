#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adasin/errors.hpp"
#include "adasin/geometry.hpp"
#include "adasin/kvfile.hpp"
#include "adasin/random.hpp"

namespace adasin {

inline constexpr int kGeneratorVersion = 1;

/// Clustered unit-sphere data. Samples are their class center plus isotropic
/// Gaussian noise of per-coordinate stddev 1/concentration, renormalized; the
/// hard subset uses concentration/10. concentration = inf gives zero noise.
struct SyntheticSpec {
    int n_classes = 10;
    int dim = 16;
    int samples_per_class = 100;
    double concentration = 20.0;
    double hard_fraction = 0.3;
    std::uint64_t seed = 0;

    void validate() const {
        ensure<SpecError>(n_classes >= 2, "n_classes must be at least 2");
        ensure<SpecError>(dim >= 2, "dim must be at least 2");
        ensure<SpecError>(samples_per_class >= 1, "samples_per_class must be positive");
        ensure<SpecError>(concentration > 0.0, "concentration must be positive");
        ensure<SpecError>(hard_fraction >= 0.0 && hard_fraction <= 1.0,
                          "hard_fraction must lie in [0, 1]");
    }

    bool operator==(const SyntheticSpec&) const = default;
};

struct Dataset {
    SyntheticSpec spec;
    Matrix inputs;            // N x dim, unit rows
    std::vector<int> labels;  // N
    Matrix centers;           // n_classes x dim, unit rows
    std::vector<char> drawn_hard;

    Eigen::Index size() const { return inputs.rows(); }
    int classes() const { return spec.n_classes; }
};

inline Dataset generate(const SyntheticSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.spec = spec;

    Rng center_rng(derive_seed(spec.seed, "centers"));
    ds.centers = normalize_rows(gaussian_matrix(spec.n_classes, spec.dim, center_rng));

    const auto per = static_cast<Eigen::Index>(spec.samples_per_class);
    const auto total = per * spec.n_classes;
    ds.inputs.resize(total, spec.dim);
    ds.labels.resize(static_cast<std::size_t>(total));
    ds.drawn_hard.assign(static_cast<std::size_t>(total), 0);

    const double noise = std::isinf(spec.concentration) ? 0.0 : 1.0 / spec.concentration;
    const double hard_noise = 10.0 * noise;
    const auto hard_count =
        static_cast<Eigen::Index>(std::llround(spec.hard_fraction * static_cast<double>(per)));

    for (int c = 0; c < spec.n_classes; ++c) {
        Rng rng(derive_seed(spec.seed, "class", static_cast<std::uint64_t>(c)));
        std::vector<char> hard(static_cast<std::size_t>(per), 0);
        std::fill_n(hard.begin(), hard_count, 1);
        std::shuffle(hard.begin(), hard.end(), rng);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index k = 0; k < per; ++k) {
            const Eigen::Index row = c * per + k;
            const double scale = hard[static_cast<std::size_t>(k)] ? hard_noise : noise;
            Vector v = ds.centers.row(c).transpose();
            for (Eigen::Index q = 0; q < spec.dim; ++q) v(q) += scale * normal(rng);
            const double norm = v.norm();
            if (norm < kMinNorm) throw SpecError("sample collapsed to the zero vector");
            ds.inputs.row(row) = v.transpose() / norm;
            ds.labels[static_cast<std::size_t>(row)] = c;
            ds.drawn_hard[static_cast<std::size_t>(row)] = hard[static_cast<std::size_t>(k)];
        }
    }
    return ds;
}

/// Keeps the first `1 - fraction` of every class for training and the rest
/// for evaluation.
inline std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction) {
    ensure<SpecError>(fraction > 0.0 && fraction < 1.0, "holdout fraction must lie in (0, 1)");
    std::vector<Eigen::Index> train_rows, eval_rows;
    std::vector<int> seen(static_cast<std::size_t>(ds.classes()), 0);
    std::vector<int> counts(static_cast<std::size_t>(ds.classes()), 0);
    for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        const auto y = static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)]);
        const int keep = static_cast<int>(std::llround((1.0 - fraction) * counts[y]));
        (seen[y]++ < keep ? train_rows : eval_rows).push_back(i);
    }
    auto take = [&](const std::vector<Eigen::Index>& rows) {
        Dataset out;
        out.spec = ds.spec;
        out.centers = ds.centers;
        out.inputs.resize(static_cast<Eigen::Index>(rows.size()), ds.inputs.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out.inputs.row(static_cast<Eigen::Index>(r)) = ds.inputs.row(rows[r]);
            out.labels.push_back(ds.labels[static_cast<std::size_t>(rows[r])]);
            out.drawn_hard.push_back(ds.drawn_hard[static_cast<std::size_t>(rows[r])]);
        }
        return out;
    };
    return {take(train_rows), take(eval_rows)};
}

struct Pair {
    Eigen::Index a;
    Eigen::Index b;
    bool same;

    bool operator==(const Pair&) const = default;
};

struct PairList {
    std::vector<Pair> pairs;

    std::size_t positives() const {
        return static_cast<std::size_t>(
            std::count_if(pairs.begin(), pairs.end(), [](const Pair& p) { return p.same; }));
    }
    std::size_t negatives() const { return pairs.size() - positives(); }
};

namespace detail {

/// Up to `want` distinct unordered pairs satisfying `accept`, sampled
/// uniformly. Falls back to full enumeration when the population is small.
template <class Accept>
std::vector<Pair> sample_pairs(Eigen::Index n, std::size_t want, bool same, Accept accept,
                               Rng& rng) {
    std::vector<Pair> out;
    if (want == 0) return out;
    std::size_t population = 0;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b)
            if (accept(a, b)) ++population;
    if (population == 0) return out;

    if (want >= population / 2) {
        std::vector<Pair> all;
        all.reserve(population);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = a + 1; b < n; ++b)
                if (accept(a, b)) all.push_back({a, b, same});
        std::shuffle(all.begin(), all.end(), rng);
        if (want < all.size()) all.resize(want);
        return all;
    }

    std::set<std::pair<Eigen::Index, Eigen::Index>> taken;
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    while (out.size() < want) {
        Eigen::Index a = pick(rng), b = pick(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!accept(a, b) || !taken.insert({a, b}).second) continue;
        out.push_back({a, b, same});
    }
    return out;
}

}  // namespace detail

/// n_pos same-label and n_neg different-label pairs, without replacement
/// while the population allows it.
inline PairList make_pairs(const std::vector<int>& labels, std::size_t n_pos, std::size_t n_neg,
                           std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    auto same = [&](Eigen::Index a, Eigen::Index b) {
        return labels[static_cast<std::size_t>(a)] == labels[static_cast<std::size_t>(b)];
    };
    auto differ = [&](Eigen::Index a, Eigen::Index b) { return !same(a, b); };

    Rng rng(derive_seed(seed, "pairs"));
    PairList out;
    out.pairs = detail::sample_pairs(n, n_pos, true, same, rng);
    if (n_pos > 0 && out.pairs.empty())
        throw InsufficientData("no two samples share a label");
    auto negatives = detail::sample_pairs(n, n_neg, false, differ, rng);
    if (n_neg > 0 && negatives.empty()) throw InsufficientData("all samples share one label");
    out.pairs.insert(out.pairs.end(), negatives.begin(), negatives.end());
    return out;
}

// ---------------------------------------------------------------------------
// On-disk format: <dir>/manifest.txt, <dir>/samples.csv, <dir>/pairs.csv

inline constexpr const char* kSamplesHeader = "# adasin-samples v1";
inline constexpr const char* kPairsHeader = "# adasin-pairs v1";

inline std::string samples_csv(const Dataset& ds) {
    std::string out = std::string(kSamplesHeader) + "\n";
    for (Eigen::Index q = 0; q < ds.inputs.cols(); ++q) out += "x" + std::to_string(q) + ",";
    out += "label\n";
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        for (Eigen::Index q = 0; q < ds.inputs.cols(); ++q) out += format_real(ds.inputs(i, q)) + ",";
        out += std::to_string(ds.labels[static_cast<std::size_t>(i)]) + "\n";
    }
    return out;
}

inline std::string pairs_csv(const PairList& pairs) {
    std::string out = std::string(kPairsHeader) + "\nindex_a,index_b,same\n";
    for (const Pair& p : pairs.pairs)
        out += std::to_string(p.a) + "," + std::to_string(p.b) + "," + (p.same ? "1" : "0") + "\n";
    return out;
}

inline KeyValues manifest(const Dataset& ds, const std::string& samples_text) {
    KeyValues kv;
    kv.set("generator.version", kGeneratorVersion);
    kv.set("spec.n_classes", ds.spec.n_classes);
    kv.set("spec.dim", ds.spec.dim);
    kv.set("spec.samples_per_class", ds.spec.samples_per_class);
    kv.set("spec.concentration", ds.spec.concentration);
    kv.set("spec.hard_fraction", ds.spec.hard_fraction);
    kv.set("spec.seed", static_cast<unsigned long long>(ds.spec.seed));
    kv.set("centers.rows", static_cast<long long>(ds.centers.rows()));
    kv.set("centers.cols", static_cast<long long>(ds.centers.cols()));
    kv.set("centers", matrix_to_string(ds.centers));
    kv.set("center_cosines", matrix_to_string(ds.centers * ds.centers.transpose()));
    kv.set("samples.rows", static_cast<long long>(ds.size()));
    kv.set("samples.fnv1a64", static_cast<unsigned long long>(fnv1a64(samples_text)));
    return kv;
}

inline SyntheticSpec spec_from_manifest(const KeyValues& kv) {
    SyntheticSpec s;
    s.n_classes = static_cast<int>(kv.integer("spec.n_classes"));
    s.dim = static_cast<int>(kv.integer("spec.dim"));
    s.samples_per_class = static_cast<int>(kv.integer("spec.samples_per_class"));
    s.concentration = kv.real("spec.concentration");
    s.hard_fraction = kv.real("spec.hard_fraction");
    s.seed = std::stoull(kv.get("spec.seed"));
    return s;
}

inline void write_dataset(const std::filesystem::path& dir, const Dataset& ds,
                          const PairList& pairs) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IOError("cannot create '" + dir.string() + "': " + ec.message());
    const std::string samples = samples_csv(ds);
    write_file((dir / "samples.csv").string(), samples);
    write_file((dir / "pairs.csv").string(), pairs_csv(pairs));
    write_file((dir / "manifest.txt").string(),
               manifest(ds, samples).to_string("adasin-dataset-manifest v1"));
}

inline std::vector<std::vector<std::string>> read_csv_rows(const std::string& text,
                                                           const std::string& header,
                                                           const std::string& what) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != header)
        throw IOError(what + ": missing header '" + header + "'");
    std::getline(in, line);  // column names
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split(trim(line), ','));
    }
    return rows;
}

inline PairList read_pairs(const std::filesystem::path& file) {
    PairList out;
    for (const auto& cells : read_csv_rows(read_file(file.string()), kPairsHeader, file.string())) {
        if (cells.size() != 3) throw IOError(file.string() + ": expected 3 columns");
        out.pairs.push_back({static_cast<Eigen::Index>(parse_integer(cells[0], "index_a")),
                             static_cast<Eigen::Index>(parse_integer(cells[1], "index_b")),
                             parse_integer(cells[2], "same") != 0});
    }
    return out;
}

/// Reads a dataset directory; verifies the manifest checksum and shape.
inline Dataset read_dataset(const std::filesystem::path& dir) {
    const KeyValues kv = KeyValues::parse(read_file((dir / "manifest.txt").string()));
    Dataset ds;
    ds.spec = spec_from_manifest(kv);
    ds.centers = matrix_from_string(kv.get("centers"), kv.integer("centers.rows"),
                                    kv.integer("centers.cols"), "centers");
    const std::string samples = read_file((dir / "samples.csv").string());
    if (std::to_string(fnv1a64(samples)) != kv.get("samples.fnv1a64"))
        throw IOError((dir / "samples.csv").string() + ": checksum mismatch");
    const auto rows = read_csv_rows(samples, kSamplesHeader, "samples.csv");
    const auto dim = static_cast<Eigen::Index>(ds.spec.dim);
    ds.inputs.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != dim + 1)
            throw IOError("samples.csv row " + std::to_string(i) + ": wrong column count");
        for (Eigen::Index q = 0; q < dim; ++q)
            ds.inputs(static_cast<Eigen::Index>(i), q) =
                parse_real(rows[i][static_cast<std::size_t>(q)], "sample");
        ds.labels.push_back(static_cast<int>(parse_integer(rows[i].back(), "label")));
    }
    validate_labels(ds.labels, ds.spec.n_classes);
    ds.drawn_hard.assign(rows.size(), 0);
    return ds;
}

}  // namespace adasin
