#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "image.hpp"
#include "stats.hpp"

namespace rphar::plot {

/// RGB raster with a few drawing primitives.
class Canvas {
public:
    Canvas(int w, int h) : img_(3, w, h, RpVariant::rgb) { std::fill(img_.pixels.begin(), img_.pixels.end(), 255); }

    void fill_rect(int x0, int y0, int w, int h, std::array<std::uint8_t, 3> color) {
        for (int y = std::max(0, y0); y < std::min(img_.height, y0 + h); ++y)
            for (int x = std::max(0, x0); x < std::min(img_.width, x0 + w); ++x)
                for (int c = 0; c < 3; ++c) img_.at(c, x, y) = color[c];
    }

    /// Digits, '.', '-', '+' and space in a 3x5 font magnified by `scale`.
    void text(int x, int y, const std::string& s, int scale = 2, std::array<std::uint8_t, 3> color = {0, 0, 0}) {
        for (char ch : s) {
            const auto glyph = glyph_for(ch);
            for (int row = 0; row < 5; ++row)
                for (int col = 0; col < 3; ++col)
                    if (glyph[row] & (4 >> col)) fill_rect(x + col * scale, y + row * scale, scale, scale, color);
            x += 4 * scale;
        }
    }

    static int text_width(const std::string& s, int scale = 2) { return static_cast<int>(s.size()) * 4 * scale; }

    const RpImage& image() const { return img_; }

private:
    static std::array<std::uint8_t, 5> glyph_for(char ch) {
        switch (ch) {
            case '0': return {7, 5, 5, 5, 7};
            case '1': return {2, 6, 2, 2, 7};
            case '2': return {7, 1, 7, 4, 7};
            case '3': return {7, 1, 7, 1, 7};
            case '4': return {5, 5, 7, 1, 1};
            case '5': return {7, 4, 7, 1, 7};
            case '6': return {7, 4, 7, 5, 7};
            case '7': return {7, 1, 1, 1, 1};
            case '8': return {7, 5, 7, 5, 7};
            case '9': return {7, 5, 7, 1, 7};
            case '.': return {0, 0, 0, 0, 2};
            case '-': return {0, 0, 7, 0, 0};
            case '+': return {0, 2, 7, 2, 0};
            default: return {0, 0, 0, 0, 0};
        }
    }

    RpImage img_;
};

/// Row-normalized confusion matrix; darker cells hold a larger share of the row.
inline RpImage confusion_heatmap(const ConfusionMatrix& cm, int cell = 24) {
    const int n = static_cast<int>(cm.size());
    const int margin = 28;
    Canvas canvas(margin + n * cell + 4, margin + n * cell + 4);
    for (int i = 0; i < n; ++i) {
        std::size_t total = 0;
        for (std::size_t v : cm[i]) total += v;
        const std::string label = std::to_string(i + 1);
        canvas.text(margin - Canvas::text_width(label) - 4, margin + i * cell + (cell - 10) / 2, label);
        canvas.text(margin + i * cell + (cell - Canvas::text_width(label)) / 2, 8, label);
        for (int j = 0; j < n; ++j) {
            const double share = total ? static_cast<double>(cm[i][j]) / static_cast<double>(total) : 0.0;
            const auto shade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - share)));
            canvas.fill_rect(margin + j * cell, margin + i * cell, cell - 1, cell - 1,
                             {shade, shade, static_cast<std::uint8_t>(std::min(255, shade + 40))});
        }
    }
    return canvas.image();
}

/// Mean difference with its confidence interval for each comparison, around a zero line.
inline RpImage interval_chart(const std::vector<Interval>& intervals) {
    const int col = 60, height = 240, margin = 20;
    Canvas canvas(margin * 2 + col * std::max<int>(1, static_cast<int>(intervals.size())), height);
    double lo = 0.0, hi = 0.0;
    for (const auto& iv : intervals) {
        lo = std::min(lo, iv.lower());
        hi = std::max(hi, iv.upper());
    }
    const double pad = std::max(1e-3, 0.1 * (hi - lo));
    lo -= pad;
    hi += pad;
    auto to_y = [&](double v) { return margin + static_cast<int>(std::lround((hi - v) / (hi - lo) * (height - 2 * margin))); };
    canvas.fill_rect(margin, to_y(0.0), col * static_cast<int>(intervals.size()), 1, {128, 128, 128});
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const int cx = margin + static_cast<int>(i) * col + col / 2;
        const int top = to_y(intervals[i].upper()), bottom = to_y(intervals[i].lower());
        const std::array<std::uint8_t, 3> color = intervals[i].lower() > 0.0   ? std::array<std::uint8_t, 3>{0, 120, 0}
                                                  : intervals[i].upper() < 0.0 ? std::array<std::uint8_t, 3>{170, 0, 0}
                                                                               : std::array<std::uint8_t, 3>{60, 60, 60};
        canvas.fill_rect(cx - 1, top, 3, std::max(1, bottom - top + 1), color);
        canvas.fill_rect(cx - 8, top, 17, 2, color);
        canvas.fill_rect(cx - 8, bottom, 17, 2, color);
        canvas.fill_rect(cx - 4, to_y(intervals[i].mean) - 3, 9, 7, color);
        const std::string label = std::to_string(i + 1);
        canvas.text(cx - Canvas::text_width(label) / 2, height - 14, label);
    }
    return canvas.image();
}

}  // namespace rphar::plot
