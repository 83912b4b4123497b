#include "jeda/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace jeda::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Distance from a point to a circular arc given by center, radius 1 and
// an angular range test, with explicit endpoints for the off-range case.
double arc_distance(double px, double py, double cx, double cy, bool upper) {
    double dx = px - cx, dy = py - cy;
    double r = std::hypot(dx, dy);
    bool in_range = upper ? dy >= 0.0 : dy <= 0.0;
    if (in_range) return std::fabs(r - 1.0);
    double e1 = std::hypot(dx - 1.0, dy);
    double e2 = std::hypot(dx + 1.0, dy);
    return std::min(e1, e2);
}

// Moon 0: unit upper half circle at the origin. Moon 1: unit lower half
// circle at (1, 0.5). Nearest arc wins, ties to moon 0.
int nearest_moon(double x, double y) {
    double d0 = arc_distance(x, y, 0.0, 0.0, true);
    double d1 = arc_distance(x, y, 1.0, 0.5, false);
    return d0 <= d1 ? 0 : 1;
}

// Centroid of the two noiseless arcs; the rotation pivot.
constexpr double kMoonCx = 0.5;
constexpr double kMoonCy = 0.25;

}  // namespace

DomainPair gen_twomoons_shift(int n_source, int n_target, double rotation_degrees,
                              double noise_sigma, uint64_t seed) {
    if (n_source <= 0 || n_target <= 0) throw ContractError("twomoons: counts must be positive");
    if (noise_sigma < 0) throw ContractError("twomoons: noise sigma must be >= 0");

    double theta = rotation_degrees * kPi / 180.0;
    double ct = std::cos(theta), st = std::sin(theta);

    auto sample_moons = [&](Rng& rng, int n, bool rotate, Matrix& x) {
        x = Matrix(n, 2);
        for (int i = 0; i < n; ++i) {
            int moon = i % 2;
            double t = rng.uniform() * kPi;
            double px, py;
            if (moon == 0) {
                px = std::cos(t);
                py = std::sin(t);
            } else {
                px = 1.0 - std::cos(t);
                py = 0.5 - std::sin(t);
            }
            px += rng.normal() * noise_sigma;
            py += rng.normal() * noise_sigma;
            if (rotate) {
                double rx = px - kMoonCx, ry = py - kMoonCy;
                px = kMoonCx + ct * rx - st * ry;
                py = kMoonCy + st * rx + ct * ry;
            }
            x.at(i, 0) = px;
            x.at(i, 1) = py;
        }
    };

    PointLabeler fS{"moons", [](std::span<const double> x) { return nearest_moon(x[0], x[1]); }};
    PointLabeler fT{"moons_rotated", [ct, st](std::span<const double> x) {
                        double rx = x[0] - kMoonCx, ry = x[1] - kMoonCy;
                        // inverse rotation
                        double px = kMoonCx + ct * rx + st * ry;
                        double py = kMoonCy - st * rx + ct * ry;
                        return nearest_moon(px, py);
                    }};

    DomainPair pair;
    Rng rng_s(mix_seed(seed, 0x500));
    Rng rng_t(mix_seed(seed, 0x7a6));
    sample_moons(rng_s, n_source, false, pair.source_x);
    sample_moons(rng_t, n_target, true, pair.target_x);

    pair.source_y.resize(n_source);
    for (int i = 0; i < n_source; ++i) pair.source_y[i] = fS(pair.source_x.row(i));
    std::vector<int> ty(n_target);
    for (int i = 0; i < n_target; ++i) ty[i] = fT(pair.target_x.row(i));
    pair.target_eval_labels = EvalOnly(std::move(ty));

    pair.classes = 2;
    pair.true_fS = fS;
    pair.true_fT = fT;
    pair.meta.generator = "twomoons";
    pair.meta.seed = seed;
    std::ostringstream p;
    p << "n_source=" << n_source << " n_target=" << n_target
      << " rotation_deg=" << format_double(rotation_degrees)
      << " noise_sigma=" << format_double(noise_sigma);
    pair.meta.params = p.str();
    return pair;
}

DomainPair gen_mixing_blobs(double separation, double shift, double flip_fraction,
                            uint64_t seed, int n_source, int n_target) {
    if (separation <= 0) throw ContractError("blobs: separation must be positive");
    if (flip_fraction < 0 || flip_fraction > 0.5)
        throw ContractError("blobs: flip_fraction must be in [0, 0.5]");
    if (flip_fraction > 0 && shift <= 0)
        throw ContractError("blobs: flipped mass needs a positive shift");
    if (shift < 0) throw ContractError("blobs: shift must be >= 0");
    if (n_source <= 0 || n_target <= 0) throw ContractError("blobs: counts must be positive");

    // Tight blobs: sigma from the smallest gap between cluster centers so
    // the closed-form thresholds label the samples cleanly.
    double min_gap = separation;
    if (shift > 0) min_gap = std::min({shift, separation - shift > 0 ? separation - shift : shift, separation});
    double sigma = min_gap / 12.0;

    Rng rng(mix_seed(seed, 0xb10b5));
    auto blob = [&](Matrix& m, int row, double cx, double cy) {
        m.at(row, 0) = cx + rng.normal() * sigma;
        m.at(row, 1) = cy + rng.normal() * sigma;
    };

    DomainPair pair;
    int ns0 = (n_source + 1) / 2;
    int ns1 = n_source - ns0;
    pair.source_x = Matrix(n_source, 2);
    pair.source_y.resize(n_source);
    for (int i = 0; i < ns0; ++i) {
        blob(pair.source_x, i, 0.0, 0.0);
    }
    for (int i = 0; i < ns1; ++i) {
        blob(pair.source_x, ns0 + i, separation, 0.0);
    }

    int nt0 = (n_target + 1) / 2;
    int nt1 = n_target - nt0;
    int n_flip = static_cast<int>(std::lround(flip_fraction * nt0));
    pair.target_x = Matrix(n_target, 2);
    for (int i = 0; i < nt0 - n_flip; ++i) blob(pair.target_x, i, shift, 0.0);
    for (int i = 0; i < n_flip; ++i) blob(pair.target_x, nt0 - n_flip + i, separation, 0.0);
    for (int i = 0; i < nt1; ++i) blob(pair.target_x, nt0 + i, separation + shift, 0.0);

    double s_threshold = separation / 2.0;
    double t_threshold = separation + shift / 2.0;
    PointLabeler fS{"blob_threshold_S",
                    [s_threshold](std::span<const double> x) { return x[0] > s_threshold ? 1 : 0; }};
    PointLabeler fT{"blob_threshold_T",
                    [t_threshold](std::span<const double> x) { return x[0] > t_threshold ? 1 : 0; }};

    for (int i = 0; i < n_source; ++i) pair.source_y[i] = fS(pair.source_x.row(i));
    std::vector<int> ty(n_target);
    for (int i = 0; i < n_target; ++i) ty[i] = fT(pair.target_x.row(i));
    pair.target_eval_labels = EvalOnly(std::move(ty));

    pair.classes = 2;
    pair.true_fS = fS;
    pair.true_fT = fT;
    pair.meta.generator = "blobs";
    pair.meta.seed = seed;
    std::ostringstream p;
    p << "separation=" << format_double(separation) << " shift=" << format_double(shift)
      << " flip_fraction=" << format_double(flip_fraction) << " n_source=" << n_source
      << " n_target=" << n_target;
    pair.meta.params = p.str();
    return pair;
}

// --- IDX binary format ---

namespace {

uint32_t read_be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
}

void write_be32(std::ofstream& out, uint32_t v) {
    uint8_t buf[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

IdxFile parse_idx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("idx: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 4)
        throw DataError("idx: " + path + ": truncated magic at byte offset 0");
    if (bytes[0] != 0 || bytes[1] != 0)
        throw DataError("idx: " + path + ": bad magic at byte offset 0");
    if (bytes[2] != 0x08)
        throw DataError("idx: " + path + ": unsupported type code at byte offset 2");
    int ndims = bytes[3];
    if (ndims == 0) throw DataError("idx: " + path + ": zero dimensions at byte offset 3");
    size_t header = 4 + 4 * static_cast<size_t>(ndims);
    if (bytes.size() < header)
        throw DataError("idx: " + path + ": truncated dimension list at byte offset " +
                        std::to_string(bytes.size()));
    IdxFile f;
    f.type_code = bytes[2];
    int64_t count = 1;
    for (int i = 0; i < ndims; ++i) {
        uint32_t d = read_be32(bytes.data() + 4 + 4 * i);
        f.dims.push_back(static_cast<int>(d));
        count *= d;
    }
    if (static_cast<int64_t>(bytes.size() - header) < count)
        throw DataError("idx: " + path + ": payload truncated at byte offset " +
                        std::to_string(bytes.size()) + " (expected " +
                        std::to_string(header + count) + " bytes)");
    f.payload.assign(bytes.begin() + header, bytes.begin() + header + count);
    return f;
}

void write_idx(const std::string& path, const IdxFile& file) {
    if (file.element_count() != static_cast<int64_t>(file.payload.size()))
        throw ContractError("idx: payload does not match dims");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("idx: cannot write " + path);
    uint8_t magic[4] = {0, 0, file.type_code, static_cast<uint8_t>(file.dims.size())};
    out.write(reinterpret_cast<const char*>(magic), 4);
    for (int d : file.dims) write_be32(out, static_cast<uint32_t>(d));
    out.write(reinterpret_cast<const char*>(file.payload.data()),
              static_cast<std::streamsize>(file.payload.size()));
}

std::vector<double> resample_16x16(std::span<const uint8_t> image, int rows, int cols) {
    std::vector<double> out(16 * 16);
    for (int r = 0; r < 16; ++r) {
        // Map output pixel centers onto input pixel centers.
        double sy = (r + 0.5) * rows / 16.0 - 0.5;
        double y0f = std::floor(sy);
        int y0 = std::clamp(static_cast<int>(y0f), 0, rows - 1);
        int y1 = std::min(y0 + 1, rows - 1);
        double wy = std::clamp(sy - y0f, 0.0, 1.0);
        for (int c = 0; c < 16; ++c) {
            double sx = (c + 0.5) * cols / 16.0 - 0.5;
            double x0f = std::floor(sx);
            int x0 = std::clamp(static_cast<int>(x0f), 0, cols - 1);
            int x1 = std::min(x0 + 1, cols - 1);
            double wx = std::clamp(sx - x0f, 0.0, 1.0);
            double v00 = image[static_cast<size_t>(y0) * cols + x0];
            double v01 = image[static_cast<size_t>(y0) * cols + x1];
            double v10 = image[static_cast<size_t>(y1) * cols + x0];
            double v11 = image[static_cast<size_t>(y1) * cols + x1];
            double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
            out[static_cast<size_t>(r) * 16 + c] = v / 255.0;
        }
    }
    return out;
}

namespace {

struct DigitSet {
    Matrix x;  // n x 256
    std::vector<int> y;
};

DigitSet load_digit_set(const std::string& images_path, const std::string& labels_path) {
    IdxFile images = parse_idx(images_path);
    IdxFile labels = parse_idx(labels_path);
    if (images.dims.size() != 3)
        throw DataError("idx: " + images_path + ": expected 3 dims for images");
    if (labels.dims.size() != 1)
        throw DataError("idx: " + labels_path + ": expected 1 dim for labels");
    int n = images.dims[0], rows = images.dims[1], cols = images.dims[2];
    if (labels.dims[0] != n)
        throw DataError("idx: image/label counts disagree for " + images_path);
    DigitSet set;
    set.x = Matrix(n, 256);
    set.y.resize(n);
    for (int i = 0; i < n; ++i) {
        auto img = std::span<const uint8_t>(images.payload)
                       .subspan(static_cast<size_t>(i) * rows * cols, static_cast<size_t>(rows) * cols);
        auto px = resample_16x16(img, rows, cols);
        std::copy(px.begin(), px.end(), set.x.row_mut(i).begin());
        set.y[i] = labels.payload[i];
        if (set.y[i] > 9) throw DataError("idx: " + labels_path + ": label out of range 0..9");
    }
    return set;
}

// Class-stratified sample of `per_class * 10` indices, seeded.
std::vector<int> stratified_sample(const std::vector<int>& labels, int per_class, Rng& rng,
                                   const std::string& what) {
    std::vector<std::vector<int>> buckets(10);
    for (size_t i = 0; i < labels.size(); ++i) buckets[labels[i]].push_back(static_cast<int>(i));
    std::vector<int> chosen;
    for (int c = 0; c < 10; ++c) {
        if (static_cast<int>(buckets[c].size()) < per_class)
            throw DataError("digit protocol: insufficient images for class " + std::to_string(c) +
                            " in " + what);
        rng.shuffle(buckets[c]);
        chosen.insert(chosen.end(), buckets[c].begin(), buckets[c].begin() + per_class);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

DomainPair digit_subset_protocol(const DigitFiles& source, const DigitFiles& target,
                                 uint64_t seed) {
    DigitSet src_train = load_digit_set(source.train_images, source.train_labels);
    DigitSet tgt_train = load_digit_set(target.train_images, target.train_labels);
    DigitSet tgt_test = load_digit_set(target.test_images, target.test_labels);

    Rng rng_s(mix_seed(seed, 0xd161));
    Rng rng_t(mix_seed(seed, 0xd162));
    std::vector<int> src_idx = stratified_sample(src_train.y, 200, rng_s, "source train");
    std::vector<int> tgt_idx = stratified_sample(tgt_train.y, 180, rng_t, "target train");

    DomainPair pair;
    pair.source_x = Matrix(static_cast<int>(src_idx.size()), 256);
    pair.source_y.resize(src_idx.size());
    for (size_t i = 0; i < src_idx.size(); ++i) {
        auto r = src_train.x.row(src_idx[i]);
        std::copy(r.begin(), r.end(), pair.source_x.row_mut(static_cast<int>(i)).begin());
        pair.source_y[i] = src_train.y[src_idx[i]];
    }
    pair.target_x = Matrix(static_cast<int>(tgt_idx.size()), 256);
    std::vector<int> ty(tgt_idx.size());
    for (size_t i = 0; i < tgt_idx.size(); ++i) {
        auto r = tgt_train.x.row(tgt_idx[i]);
        std::copy(r.begin(), r.end(), pair.target_x.row_mut(static_cast<int>(i)).begin());
        ty[i] = tgt_train.y[tgt_idx[i]];
    }
    pair.target_eval_labels = EvalOnly(std::move(ty));

    EvalSet eval;
    eval.x = std::move(tgt_test.x);
    eval.labels = std::move(tgt_test.y);
    pair.eval_split = std::move(eval);

    pair.classes = 10;
    pair.meta.generator = "digits";
    pair.meta.seed = seed;
    pair.meta.params = "source=2000 target=1800 resolution=16x16";
    return pair;
}

void export_csv(const DomainPair& pair, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    int d = pair.source_x.cols;
    out << "# schema: jeda.dataset.v1\n";
    for (int j = 0; j < d; ++j) out << "x" << j << ",";
    out << "label,domain\n";
    for (int i = 0; i < pair.source_x.rows; ++i) {
        for (int j = 0; j < d; ++j) out << format_double(pair.source_x.at(i, j)) << ",";
        out << pair.source_y[i] << ",source\n";
    }
    auto ty = pair.target_eval_labels.for_evaluation();
    for (int i = 0; i < pair.target_x.rows; ++i) {
        for (int j = 0; j < d; ++j) out << format_double(pair.target_x.at(i, j)) << ",";
        out << ty[i] << ",target\n";
    }
}

}  // namespace jeda::data
