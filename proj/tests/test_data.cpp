#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "jeda/bound_oracle.hpp"
#include "jeda/data.hpp"
#include "testutil.hpp"

using namespace jeda;

namespace {

template <typename T>
concept HasTargetLabels = requires(T t) { t.target_y; };
template <typename T>
concept HasTargetEval = requires(T t) { t.target_eval_labels; };

// The training surface carries no member through which target labels are
// reachable; only the full DomainPair does, behind the eval wrapper.
static_assert(!HasTargetLabels<data::TrainView>);
static_assert(!HasTargetEval<data::TrainView>);
static_assert(HasTargetEval<data::DomainPair>);

bound::Hypothesis as_hypothesis(const data::PointLabeler& f) {
    return bound::Hypothesis{f.name, f.fn};
}

double lambda_for(const data::DomainPair& pair, int thresholds = 24) {
    auto fS = as_hypothesis(*pair.true_fS);
    auto fT = as_hypothesis(*pair.true_fT);
    auto grid = bound::build_grid(pair.source_x, pair.target_x, fS, fT, thresholds, 8, 8);
    return bound::lambda_enumerate(grid, pair.source_x, pair.target_x, fS, fT).lambda;
}

}  // namespace

TEST_CASE("two moons: determinism and labeled consistency") {
    auto a = data::gen_twomoons_shift(200, 150, 30, 0.1, 42);
    auto b = data::gen_twomoons_shift(200, 150, 30, 0.1, 42);
    CHECK(a.source_x.data == b.source_x.data);
    CHECK(a.target_x.data == b.target_x.data);
    CHECK(a.source_y == b.source_y);
    CHECK(a.source_x.rows == 200);
    CHECK(a.target_x.rows == 150);
    CHECK(a.classes == 2);
    REQUIRE(a.synthetic());

    // labels equal the closed-form labeler on every sample
    for (int i = 0; i < a.source_x.rows; ++i)
        CHECK(a.source_y[i] == (*a.true_fS)(a.source_x.row(i)));
    auto ty = a.target_eval_labels.for_evaluation();
    for (int i = 0; i < a.target_x.rows; ++i)
        CHECK(ty[i] == (*a.true_fT)(a.target_x.row(i)));

    auto c = data::gen_twomoons_shift(200, 150, 30, 0.1, 43);
    CHECK(a.source_x.data != c.source_x.data);
}

TEST_CASE("two moons: zero rotation means matched domains") {
    auto pair = data::gen_twomoons_shift(1000, 1000, 0, 0.1, 7);
    // the best grid hypothesis fit on the source scores about the same on
    // the target
    auto fS = as_hypothesis(*pair.true_fS);
    auto fT = as_hypothesis(*pair.true_fT);
    auto grid = bound::build_grid(pair.source_x, pair.target_x, fS, fT, 16, 8, 8);
    double best_src_err = 1.0;
    int best = 0;
    for (size_t i = 0; i < grid.hypotheses.size(); ++i) {
        double e = bound::risk01(grid.hypotheses[i], fS, pair.source_x).value();
        if (e < best_src_err) {
            best_src_err = e;
            best = static_cast<int>(i);
        }
    }
    double tgt_err = bound::risk01(grid.hypotheses[best], fT, pair.target_x).value();
    CHECK(std::fabs(tgt_err - best_src_err) <= 0.02);
}

TEST_CASE("two moons: 180 degrees swaps the moons, lambda is large") {
    auto pair = data::gen_twomoons_shift(600, 600, 180, 0.05, 11);
    double lambda = lambda_for(pair);
    CHECK(lambda > 0.5);

    // small rotations keep lambda small
    auto benign = data::gen_twomoons_shift(600, 600, 10, 0.05, 11);
    CHECK(lambda_for(benign) < 0.1);
}

TEST_CASE("mixing blobs: counts, determinism, closed-form labels") {
    auto pair = data::gen_mixing_blobs(8.0, 3.2, 0.3, 5, 501, 400);
    CHECK(pair.source_x.rows == 501);
    CHECK(pair.target_x.rows == 400);
    CHECK(pair.source_y.size() == 501);
    CHECK(pair.target_eval_labels.size() == 400);
    auto again = data::gen_mixing_blobs(8.0, 3.2, 0.3, 5, 501, 400);
    CHECK(pair.source_x.data == again.source_x.data);

    for (int i = 0; i < pair.source_x.rows; ++i)
        CHECK(pair.source_y[i] == (*pair.true_fS)(pair.source_x.row(i)));
}

TEST_CASE("mixing blobs: lambda tracks the implied overlap") {
    // flip_fraction 0: benign shift, lambda ~ 0
    auto benign = data::gen_mixing_blobs(8.0, 3.2, 0.0, 9, 1000, 1000);
    CHECK(lambda_for(benign) < 0.01);

    // flip_fraction 0.4 puts ~20% of the target mass in conflict
    auto hard = data::gen_mixing_blobs(8.0, 3.2, 0.4, 9, 1000, 1000);
    double lambda = lambda_for(hard);
    CHECK(std::fabs(lambda - 0.2) <= 0.05);

    // independent exhaustive scan over 1-D thresholds
    double best = 1e9;
    for (double t = -1.0; t <= 13.0; t += 0.02) {
        for (int pol = 0; pol < 2; ++pol) {
            int miss_s = 0, miss_t = 0;
            for (int i = 0; i < hard.source_x.rows; ++i) {
                int pred = (hard.source_x.at(i, 0) > t) != (pol != 0) ? 1 : 0;
                if (pred != hard.source_y[i]) miss_s++;
            }
            auto ty = hard.target_eval_labels.for_evaluation();
            for (int i = 0; i < hard.target_x.rows; ++i) {
                int pred = (hard.target_x.at(i, 0) > t) != (pol != 0) ? 1 : 0;
                if (pred != ty[i]) miss_t++;
            }
            best = std::min(best, miss_s / 1000.0 + miss_t / 1000.0);
        }
    }
    CHECK(lambda == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("mixing blobs: lambda is monotone in flip_fraction") {
    double prev = -1.0;
    for (double f : {0.0, 0.1, 0.2, 0.3, 0.4}) {
        auto pair = data::gen_mixing_blobs(8.0, 3.2, f, 77, 800, 800);
        double lambda = lambda_for(pair);
        CHECK(lambda >= prev - 1e-12);
        prev = lambda;
    }
}

TEST_CASE("mixing blobs input validation") {
    CHECK_THROWS_AS(data::gen_mixing_blobs(0.0, 1.0, 0.1, 1), ContractError);
    CHECK_THROWS_AS(data::gen_mixing_blobs(8.0, 1.0, 0.6, 1), ContractError);
    CHECK_THROWS_AS(data::gen_mixing_blobs(8.0, 0.0, 0.2, 1), ContractError);
}

TEST_CASE("idx parse against an independently assembled reference file") {
    // header 00 00 08 03, dims (10, 16, 16), 2560 payload bytes
    std::string path = "test_ref.idx";
    {
        std::ofstream out(path, std::ios::binary);
        unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 10, 0, 0, 0, 16, 0, 0, 0, 16};
        out.write(reinterpret_cast<char*>(header), 16);
        for (int i = 0; i < 2560; ++i) {
            unsigned char b = static_cast<unsigned char>(i % 251);
            out.write(reinterpret_cast<char*>(&b), 1);
        }
    }
    auto f = data::parse_idx(path);
    CHECK(f.type_code == 0x08);
    REQUIRE(f.dims.size() == 3);
    CHECK(f.dims[0] == 10);
    CHECK(f.dims[1] == 16);
    CHECK(f.dims[2] == 16);
    CHECK(f.payload.size() == 2560);
    CHECK(f.payload[0] == 0);
    CHECK(f.payload[13] == 13);
    std::remove(path.c_str());
}

TEST_CASE("idx truncation and bad magic raise data errors") {
    std::string path = "test_bad.idx";
    {
        std::ofstream out(path, std::ios::binary);
        unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 10, 0, 0, 0, 16, 0, 0, 0, 16};
        out.write(reinterpret_cast<char*>(header), 16);
        for (int i = 0; i < 100; ++i) out.put(0);  // far short of 2560
    }
    CHECK_THROWS_AS(data::parse_idx(path), DataError);
    {
        std::ofstream out(path, std::ios::binary);
        unsigned char header[8] = {9, 9, 8, 1, 0, 0, 0, 1};
        out.write(reinterpret_cast<char*>(header), 8);
        out.put(0);
    }
    CHECK_THROWS_AS(data::parse_idx(path), DataError);
    {
        std::ofstream out(path, std::ios::binary);
        unsigned char header[8] = {0, 0, 7, 1, 0, 0, 0, 1};  // wrong type code
        out.write(reinterpret_cast<char*>(header), 8);
        out.put(0);
    }
    CHECK_THROWS_AS(data::parse_idx(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("idx write-then-parse round trip") {
    data::IdxFile f;
    f.dims = {3, 4};
    f.payload.resize(12);
    for (size_t i = 0; i < 12; ++i) f.payload[i] = static_cast<uint8_t>(i * 7);
    std::string path = "test_rt.idx";
    data::write_idx(path, f);
    auto g = data::parse_idx(path);
    CHECK(g.dims == f.dims);
    CHECK(g.payload == f.payload);
    std::remove(path.c_str());
}

namespace {

// Tiny synthetic digit corpus in IDX form.
void write_digit_corpus(const std::string& img_path, const std::string& lbl_path, int per_class,
                        int rows, int cols, uint64_t seed) {
    int n = per_class * 10;
    data::IdxFile images, labels;
    images.dims = {n, rows, cols};
    images.payload.resize(static_cast<size_t>(n) * rows * cols);
    labels.dims = {n};
    labels.payload.resize(n);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        int digit = i % 10;
        labels.payload[i] = static_cast<uint8_t>(digit);
        for (int p = 0; p < rows * cols; ++p)
            images.payload[static_cast<size_t>(i) * rows * cols + p] =
                static_cast<uint8_t>((digit * 20 + rng.uniform_int(20)) % 256);
    }
    data::write_idx(img_path, images);
    data::write_idx(lbl_path, labels);
}

}  // namespace

TEST_CASE("digit protocol: 2000/1800 stratified, deterministic") {
    write_digit_corpus("src_img.idx", "src_lbl.idx", 230, 28, 28, 1);
    write_digit_corpus("tgt_img.idx", "tgt_lbl.idx", 200, 16, 16, 2);
    write_digit_corpus("tgt_test_img.idx", "tgt_test_lbl.idx", 30, 16, 16, 3);

    data::DigitFiles src{"src_img.idx", "src_lbl.idx", "", ""};
    data::DigitFiles tgt{"tgt_img.idx", "tgt_lbl.idx", "tgt_test_img.idx", "tgt_test_lbl.idx"};
    auto pair = data::digit_subset_protocol(src, tgt, 99);

    CHECK(pair.source_x.rows == 2000);
    CHECK(pair.target_x.rows == 1800);
    CHECK(pair.source_x.cols == 256);
    CHECK(pair.target_x.cols == 256);
    CHECK(pair.classes == 10);
    REQUIRE(pair.eval_split.has_value());
    CHECK(pair.eval_split->x.rows == 300);
    CHECK_FALSE(pair.synthetic());

    // stratification: exactly 200 source images per class
    std::vector<int> counts(10, 0);
    for (int y : pair.source_y) counts[y]++;
    for (int c = 0; c < 10; ++c) CHECK(counts[c] == 200);

    // pixels scaled into [0, 1]
    for (double v : pair.source_x.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    auto pair2 = data::digit_subset_protocol(src, tgt, 99);
    CHECK(pair.source_x.data == pair2.source_x.data);
    CHECK(pair.target_x.data == pair2.target_x.data);

    // insufficient class volume is a data error
    write_digit_corpus("small_img.idx", "small_lbl.idx", 100, 28, 28, 4);
    data::DigitFiles small{"small_img.idx", "small_lbl.idx", "", ""};
    CHECK_THROWS_AS(data::digit_subset_protocol(small, tgt, 1), DataError);

    for (const char* p : {"src_img.idx", "src_lbl.idx", "tgt_img.idx", "tgt_lbl.idx",
                          "tgt_test_img.idx", "tgt_test_lbl.idx", "small_img.idx",
                          "small_lbl.idx"})
        std::remove(p);
}

TEST_CASE("resample_16x16 keeps constant images constant") {
    std::vector<uint8_t> img(28 * 28, 200);
    auto out = data::resample_16x16(img, 28, 28);
    REQUIRE(out.size() == 256);
    for (double v : out) CHECK(v == doctest::Approx(200.0 / 255.0).epsilon(1e-12));

    // native 16x16 passes through exactly
    std::vector<uint8_t> native(256);
    for (size_t i = 0; i < 256; ++i) native[i] = static_cast<uint8_t>(i % 256);
    auto through = data::resample_16x16(native, 16, 16);
    for (size_t i = 0; i < 256; ++i)
        CHECK(through[i] == doctest::Approx(native[i] / 255.0).epsilon(1e-12));
}

TEST_CASE("export_csv writes both domains with labels") {
    auto pair = data::gen_mixing_blobs(8.0, 3.2, 0.2, 3, 20, 10);
    std::string path = "test_export.csv";
    data::export_csv(pair, path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "# schema: jeda.dataset.v1");
    REQUIRE(std::getline(in, line));
    CHECK(line == "x0,x1,label,domain");
    int src = 0, tgt = 0;
    while (std::getline(in, line)) {
        if (line.find(",source") != std::string::npos) src++;
        if (line.find(",target") != std::string::npos) tgt++;
    }
    CHECK(src == 20);
    CHECK(tgt == 10);
    std::remove(path.c_str());
}
