#include "ndl/digits.hpp"

#include <algorithm>
#include <cmath>

namespace ndl {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Canvas {
    Vec pixels = Vec(kDigitSide * kDigitSide, 0.0);

    void stamp(size_t x, size_t y, double v) {
        double& p = pixels[y * kDigitSide + x];
        p = std::max(p, v);
    }
};

struct Pen {
    double dx, dy;        // global translation
    double scale;         // about the canvas center
    double rot_cos, rot_sin;  // rotation about the canvas center
    double thickness;     // stroke diameter in pixels
    double intensity;     // peak ink value
    Canvas* canvas;

    void place(double& x, double& y) const {
        const double c = (kDigitSide - 1) / 2.0;
        const double rx = x - c, ry = y - c;
        x = c + scale * (rot_cos * rx - rot_sin * ry) + dx;
        y = c + scale * (rot_sin * rx + rot_cos * ry) + dy;
    }

    void segment(double x0, double y0, double x1, double y1) const {
        place(x0, y0);
        place(x1, y1);

        const double half = thickness * scale / 2.0;
        const double reach = half + 1.0;
        const size_t xa = size_t(std::clamp(std::floor(std::min(x0, x1) - reach), 0.0, 27.0));
        const size_t xb = size_t(std::clamp(std::ceil(std::max(x0, x1) + reach), 0.0, 27.0));
        const size_t ya = size_t(std::clamp(std::floor(std::min(y0, y1) - reach), 0.0, 27.0));
        const size_t yb = size_t(std::clamp(std::ceil(std::max(y0, y1) + reach), 0.0, 27.0));

        const double vx = x1 - x0, vy = y1 - y0;
        const double len2 = vx * vx + vy * vy;
        for (size_t y = ya; y <= yb; ++y) {
            for (size_t x = xa; x <= xb; ++x) {
                const double px = double(x) - x0, py = double(y) - y0;
                double t = len2 > 0.0 ? (px * vx + py * vy) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double ex = px - t * vx, ey = py - t * vy;
                const double dist = std::sqrt(ex * ex + ey * ey);
                // 1px anti-aliased falloff at the stroke edge
                const double cover = std::clamp(half + 0.5 - dist, 0.0, 1.0);
                if (cover > 0.0) canvas->stamp(x, y, intensity * cover);
            }
        }
    }

    /// Elliptic arc from angle a0 to a1 (degrees; y axis points down, so 90
    /// is the bottom of the ellipse), approximated by short segments.
    void arc(double cx, double cy, double rx, double ry, double a0, double a1) const {
        const int steps = std::max(8, int(std::fabs(a1 - a0) / 12.0));
        double px = cx + rx * std::cos(a0 * kPi / 180.0);
        double py = cy + ry * std::sin(a0 * kPi / 180.0);
        for (int i = 1; i <= steps; ++i) {
            const double a = (a0 + (a1 - a0) * i / steps) * kPi / 180.0;
            const double nx = cx + rx * std::cos(a);
            const double ny = cy + ry * std::sin(a);
            segment(px, py, nx, ny);
            px = nx;
            py = ny;
        }
    }

    void ellipse(double cx, double cy, double rx, double ry) const {
        arc(cx, cy, rx, ry, 0.0, 360.0);
    }
};

void draw_glyph(int digit, const Pen& pen, RngState& rng) {
    // small independent wobble per anchor point, plus per-sample style
    // variants so classes are multimodal the way handwriting is
    auto j = [&rng]() { return rng.uniform(-1.0, 1.0); };
    const double style = rng.uniform01();
    switch (digit) {
        case 0:
            pen.ellipse(14 + j(), 14 + j(), (style < 0.3 ? 4.2 : 5.6) + j() * 0.8,
                        8.4 + j() * 0.8);
            break;
        case 1:
            pen.segment(14.5 + j(), 5 + j(), 14.5 + j(), 23 + j());
            pen.segment(10.5 + j(), 9.5 + j(), 14.5 + j(), 5 + j());
            if (style < 0.5) pen.segment(10.5 + j(), 23 + j(), 18.5 + j(), 23 + j());
            break;
        case 2:
            pen.arc(13.5 + j(), 9.5 + j(), 5.4, 4.6, -165 + j() * 4, 15 + j() * 4);
            if (style < 0.5) {
                pen.segment(18.7 + j(), 11 + j(), 9 + j(), 22.5 + j());
            } else {
                // curly bottom: sweep in through a shallow arc instead
                pen.arc(14 + j(), 17 + j(), 5.2, 6.0, 10 + j() * 4, 115 + j() * 4);
                pen.segment(11.5 + j(), 22.5 + j(), 9 + j(), 22.5 + j());
            }
            pen.segment(9 + j(), 22.5 + j(), 19.5 + j(), 22.5 + j());
            break;
        case 3:
            pen.arc(13 + j(), 9.5 + j(), 5.0, 4.4, -150 + j() * 4, 75 + j() * 4);
            pen.arc(13 + j(), 18 + j(), 5.5, 5.0, -75 + j() * 4, 150 + j() * 4);
            break;
        case 4:
            pen.segment(16.5 + j(), 5 + j(), 16.5 + j(), 23 + j());
            pen.segment(16.5 + j(), 5 + j(), 8.5 + j(), 15.5 + j());
            pen.segment(8.5 + j(), 15.5 + j(), 21 + j(), 15.5 + j());
            break;
        case 5:
            pen.segment(18.5 + j(), 6 + j(), 10 + j(), 6 + j());
            pen.segment(10 + j(), 6 + j(), 10 + j(), 12.5 + j());
            pen.arc(13 + j(), 17 + j(), 5.6, 5.4, -100 + j() * 4, 135 + j() * 4);
            break;
        case 6:
            pen.segment(17.5 + j(), 5 + j(), 11.5 + j(), 14 + j());
            pen.ellipse(13.5 + j(), 17.5 + j(), 4.8, 5.2);
            break;
        case 7:
            pen.segment(9 + j(), 6.5 + j(), 19.5 + j(), 6.5 + j());
            pen.segment(19.5 + j(), 6.5 + j(), 11.5 + j(), 23 + j());
            if (style < 0.5) pen.segment(11 + j(), 14.5 + j(), 18 + j(), 14.5 + j());
            break;
        case 8:
            pen.ellipse(14 + j(), 9.8 + j(), 4.4, 4.2);
            pen.ellipse(14 + j(), 18.3 + j(), 5.2, 4.6);
            break;
        case 9:
            pen.ellipse(13.5 + j(), 10.3 + j(), 4.6, 4.4);
            pen.segment(18 + j(), 10.5 + j(), 16.5 + j(), 23 + j());
            break;
        default:
            throw Error("render_digit: digit " + std::to_string(digit) + " outside 0..9");
    }
}

}  // namespace

Vec render_digit(int digit, RngState& rng) {
    Canvas canvas;
    Pen pen;
    pen.dx = rng.uniform(-2.2, 2.2);
    pen.dy = rng.uniform(-2.2, 2.2);
    pen.scale = rng.uniform(0.78, 1.15);
    const double theta = rng.uniform(-0.20, 0.20);  // radians, ~11 degrees
    pen.rot_cos = std::cos(theta);
    pen.rot_sin = std::sin(theta);
    pen.thickness = rng.uniform(1.3, 2.9);
    pen.intensity = rng.uniform(0.75, 1.0);
    pen.canvas = &canvas;
    draw_glyph(digit, pen, rng);
    return canvas.pixels;
}

LabeledDataset make_digit_dataset(const std::vector<int>& digits, size_t per_class,
                                  RngState& rng) {
    Matrix images(digits.size() * per_class, kDigitSide * kDigitSide);
    std::vector<int> labels(images.rows);
    size_t row = 0;
    for (int digit : digits) {
        for (size_t s = 0; s < per_class; ++s, ++row) {
            images.set_row(row, render_digit(digit, rng));
            labels[row] = digit;
        }
    }
    return LabeledDataset(std::move(images), std::move(labels), kDigitSide, kDigitSide);
}

}  // namespace ndl
