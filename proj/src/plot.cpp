#include "jeda/plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jeda/config.hpp"
#include "jeda/discrepancy.hpp"
#include "jeda/experiment.hpp"

namespace jeda::plot {

namespace fs = std::filesystem;

namespace {

// Minimal SVG assembly: fixed canvas, linear data-to-pixel mapping.
struct Canvas {
    double width = 640, height = 480;
    double margin = 48;
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    std::ostringstream body;

    double px(double x) const {
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin);
    }
    double py(double y) const {
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin);
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
        body << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts) body << px(x) << "," << py(y) << " ";
        body << "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& color,
                const std::string& extra = "") {
        body << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"" << r
             << "\" fill=\"" << color << "\" " << extra << "/>\n";
    }
    void rect_px(double x, double y, double w, double h, const std::string& color) {
        body << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
             << "\" fill=\"" << color << "\"/>\n";
    }
    void text(double x_pix, double y_pix, const std::string& s, const std::string& extra = "") {
        body << "<text x=\"" << x_pix << "\" y=\"" << y_pix
             << "\" font-family=\"monospace\" font-size=\"12\" " << extra << ">" << s
             << "</text>\n";
    }
    void axes(const std::string& x_label, const std::string& y_label) {
        body << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
             << width - margin << "\" y2=\"" << height - margin
             << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        body << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
             << "\" y2=\"" << height - margin << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        text(width / 2 - 20, height - 10, x_label);
        text(6, margin - 10, y_label);
        std::ostringstream lo_x, hi_x, lo_y, hi_y;
        lo_x << x_lo;
        hi_x << x_hi;
        lo_y << y_lo;
        hi_y << y_hi;
        text(margin, height - margin + 16, lo_x.str());
        text(width - margin - 30, height - margin + 16, hi_x.str());
        text(4, height - margin, lo_y.str());
        text(4, margin + 4, hi_y.str());
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot open for writing: " + path);
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
            << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
        out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
            << "\" fill=\"white\"/>\n";
        out << body.str();
        out << "</svg>\n";
    }
};

}  // namespace

std::vector<CurvePoint> discrepancy_curves(const std::vector<double>& gaps, double clamp) {
    std::vector<CurvePoint> out;
    out.reserve(gaps.size());
    for (double gap : gaps) {
        double p = 1.0 / (1.0 + std::exp(-gap));  // softmax of (+gap/2, -gap/2)
        std::vector<double> f1{p, 1.0 - p};
        std::vector<double> f2{1.0 - p, p};
        CurvePoint c;
        c.gap = gap;
        c.primitive = disc::cmd_pointwise(f1, f2, disc::Form::primitive, clamp);
        c.dual = disc::cmd_pointwise(f1, f2, disc::Form::dual, clamp);
        c.l1 = 0.5 * (std::fabs(f1[0] - f2[0]) + std::fabs(f1[1] - f2[1]));
        out.push_back(c);
    }
    return out;
}

void plot_curves(const std::string& out_svg) {
    std::vector<double> gaps;
    for (int i = 0; i <= 160; ++i) gaps.push_back(-4.0 + 8.0 * i / 160.0);
    auto pts = discrepancy_curves(gaps);

    Canvas c;
    c.x_lo = -4;
    c.x_hi = 4;
    double ylo = 0, yhi = 0;
    for (const auto& p : pts) {
        ylo = std::min({ylo, p.primitive, p.dual, p.l1});
        yhi = std::max({yhi, p.primitive, p.dual, p.l1});
    }
    c.y_lo = ylo - 0.5;
    c.y_hi = yhi + 0.5;
    auto line_of = [&](double CurvePoint::* field, const std::string& color) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& p : pts) xy.emplace_back(p.gap, p.*field);
        c.polyline(xy, color);
    };
    line_of(&CurvePoint::primitive, "#d62728");
    line_of(&CurvePoint::dual, "#1f77b4");
    line_of(&CurvePoint::l1, "#2ca02c");
    c.axes("logit gap", "discrepancy");
    c.text(c.width - 170, c.margin + 10, "primitive", "fill=\"#d62728\"");
    c.text(c.width - 170, c.margin + 26, "dual", "fill=\"#1f77b4\"");
    c.text(c.width - 170, c.margin + 42, "l1", "fill=\"#2ca02c\"");
    c.write(out_svg);
}

void plot_boundary(const std::string& run_dir, int seed_index, const std::string& out_svg) {
    fs::path dir(run_dir);
    cfg::ExperimentConfig config = cfg::load_config((dir / "config.echo").string());
    if (seed_index < 0 || seed_index >= static_cast<int>(config.seeds.size()))
        throw DataError("plot boundary: seed index out of range");
    fs::path ckpt = dir / ("seed_" + std::to_string(config.seeds[seed_index])) / "checkpoint.txt";
    obj::Hyperparams hp = config.train;
    hp.seed = config.seeds[seed_index];
    obj::TrainState state = experiment::load_checkpoint(ckpt.string(), hp);

    data::DomainPair pair = cfg::build_dataset(config.dataset);
    if (pair.source_x.cols != 2)
        throw DataError("plot boundary: only 2-D datasets can be rasterized");

    double xlo = pair.source_x.at(0, 0), xhi = xlo, ylo = pair.source_x.at(0, 1), yhi = ylo;
    auto scan = [&](const Matrix& m) {
        for (int i = 0; i < m.rows; ++i) {
            xlo = std::min(xlo, m.at(i, 0));
            xhi = std::max(xhi, m.at(i, 0));
            ylo = std::min(ylo, m.at(i, 1));
            yhi = std::max(yhi, m.at(i, 1));
        }
    };
    scan(pair.source_x);
    scan(pair.target_x);
    double padx = 0.08 * (xhi - xlo + 1e-9), pady = 0.08 * (yhi - ylo + 1e-9);
    Canvas c;
    c.x_lo = xlo - padx;
    c.x_hi = xhi + padx;
    c.y_lo = ylo - pady;
    c.y_hi = yhi + pady;

    // Decision regions on a raster grid.
    const int cells = 80;
    Matrix grid(cells * cells, 2);
    for (int r = 0; r < cells; ++r) {
        for (int q = 0; q < cells; ++q) {
            grid.at(r * cells + q, 0) = c.x_lo + (c.x_hi - c.x_lo) * (q + 0.5) / cells;
            grid.at(r * cells + q, 1) = c.y_lo + (c.y_hi - c.y_lo) * (r + 0.5) / cells;
        }
    }
    std::vector<int> region = obj::predict(state, grid);
    const char* region_colors[] = {"#dbe9f6", "#fbe3db", "#e5f5e0", "#f2f0f7",
                                   "#fff7bc", "#e0ecf4", "#fee0d2", "#efedf5",
                                   "#e5f5f9", "#fde0dd"};
    double cw = (c.width - 2 * c.margin) / cells;
    double ch = (c.height - 2 * c.margin) / cells;
    for (int r = 0; r < cells; ++r)
        for (int q = 0; q < cells; ++q)
            c.rect_px(c.margin + q * cw, c.height - c.margin - (r + 1) * ch, cw + 0.5, ch + 0.5,
                      region_colors[region[r * cells + q] % 10]);

    const char* class_colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8"};
    for (int i = 0; i < pair.source_x.rows; ++i)
        c.circle(pair.source_x.at(i, 0), pair.source_x.at(i, 1), 2.0,
                 class_colors[pair.source_y[i] % 10]);
    auto ty = pair.target_eval_labels.for_evaluation();
    for (int i = 0; i < pair.target_x.rows; ++i)
        c.circle(pair.target_x.at(i, 0), pair.target_x.at(i, 1), 2.0, "none",
                 std::string("stroke=\"") + class_colors[ty[i] % 10] + "\" stroke-width=\"1\"");
    c.axes("x0", "x1");
    c.write(out_svg);
}

void plot_marginal_discrepancy(const std::string& metrics_csv, const std::string& out_svg) {
    auto history = experiment::read_metrics_csv(metrics_csv);
    if (history.empty()) throw DataError("plot marginal: metrics file has no rows");
    Canvas c;
    c.x_lo = 0;
    c.x_hi = static_cast<double>(history.back().step) + 1;
    double ylo = 0, yhi = 0;
    std::vector<std::pair<double, double>> xy;
    for (const auto& m : history) {
        double v = m.eps_T_f1f2 + m.eps_S_f1f2;
        ylo = std::min(ylo, v);
        yhi = std::max(yhi, v);
        xy.emplace_back(static_cast<double>(m.step), v);
    }
    c.y_lo = ylo - 0.1;
    c.y_hi = yhi + 0.1;
    c.polyline(xy, "#1f77b4");
    c.axes("step", "marginal discrepancy");
    c.write(out_svg);
}

}  // namespace jeda::plot
