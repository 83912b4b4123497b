#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jeda/common.hpp"

namespace jeda::data {

// Closed-form ground-truth labeling attached to synthetic pairs.
struct PointLabeler {
    std::string name;
    std::function<int(std::span<const double>)> fn;
    int operator()(std::span<const double> x) const { return fn(x); }
};

struct EvalSet {
    Matrix x;
    std::vector<int> labels;
};

// Wrapper that keeps evaluation labels out of the training surface.
// Anything reading these must spell out that it is evaluating.
class EvalOnly {
  public:
    EvalOnly() = default;
    explicit EvalOnly(std::vector<int> labels) : labels_(std::move(labels)) {}
    std::span<const int> for_evaluation() const { return labels_; }
    size_t size() const { return labels_.size(); }

  private:
    std::vector<int> labels_;
};

struct Meta {
    std::string generator;
    std::string params;
    uint64_t seed = 0;
};

struct DomainPair {
    Matrix source_x;
    std::vector<int> source_y;
    Matrix target_x;               // unlabeled as far as training is concerned
    EvalOnly target_eval_labels;   // aligned with target_x rows
    std::optional<EvalSet> eval_split;  // separate held-out split (digit protocol)
    int classes = 2;
    Meta meta;
    std::optional<PointLabeler> true_fS, true_fT;

    bool synthetic() const { return true_fS.has_value() && true_fT.has_value(); }
};

// The only view of a DomainPair the optimization loop receives. There is
// deliberately no member through which target labels can be reached.
struct TrainView {
    const Matrix& source_x;
    const std::vector<int>& source_y;
    const Matrix& target_x;
    int classes;
};

inline TrainView train_view(const DomainPair& d) {
    return TrainView{d.source_x, d.source_y, d.target_x, d.classes};
}

// Two interleaved half circles with Gaussian noise; the target domain is
// the same process rotated about the fixed moon centroid. Labels come
// from the closed-form nearest-arc functions, so risk01(f_S) is zero on
// the source sample by construction.
DomainPair gen_twomoons_shift(int n_source, int n_target, double rotation_degrees,
                              double noise_sigma, uint64_t seed);

// Two-class Gaussian blobs where a flip_fraction of the target class-0
// mass sits exactly on the source class-1 support, and the remaining
// target mass is the source layout translated by `shift` along x0. The
// closed-form labelers are single thresholds on x0.
DomainPair gen_mixing_blobs(double separation, double shift, double flip_fraction,
                            uint64_t seed, int n_source = 2000, int n_target = 2000);

struct IdxFile {
    uint8_t type_code = 0x08;  // unsigned byte payloads only
    std::vector<int> dims;     // big-endian 32-bit sizes in the file
    std::vector<uint8_t> payload;

    int64_t element_count() const {
        int64_t n = 1;
        for (int d : dims) n *= d;
        return n;
    }
};

IdxFile parse_idx(const std::string& path);
void write_idx(const std::string& path, const IdxFile& file);

struct DigitFiles {
    std::string train_images, train_labels, test_images, test_labels;
};

// 2000 source images and 1800 target images, class-stratified, resampled
// to a common 16x16 resolution and scaled to [0,1]; the target's standard
// test split is kept as the evaluation set.
DomainPair digit_subset_protocol(const DigitFiles& source, const DigitFiles& target,
                                 uint64_t seed);

// Resample one image to 16x16 with bilinear interpolation (values 0..255
// scaled to [0,1]).
std::vector<double> resample_16x16(std::span<const uint8_t> image, int rows, int cols);

// Rows: x..., label, domain (source|target). Target labels come from the
// evaluation view; this is a data dump, not a training surface.
void export_csv(const DomainPair& pair, const std::string& path);

}  // namespace jeda::data
