#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace rphar {

namespace fs = std::filesystem;

/// Standard gravity used when decoding WHARF samples.
inline constexpr double kGravity = 9.81;
/// WHARF sampling frequency.
inline constexpr double kWharfRateHz = 32.0;
/// Largest 6-bit coded value.
inline constexpr int kMaxCoded = 63;

/**
 * @brief One tri-axial accelerometer recording.
 *
 * Axis values are in m/s^2. All three axes share the same length.
 */
struct SensorSample {
    std::string id;
    std::string label;
    std::array<std::vector<double>, 3> axes;
    double sample_rate_hz = kWharfRateHz;

    std::size_t length() const { return axes[0].size(); }

    /// Throws if the axes differ in length, are empty, or the rate is not positive.
    void validate() const {
        if (axes[0].empty())
            throw LengthError("sample '" + id + "' has no data");
        if (axes[1].size() != axes[0].size() || axes[2].size() != axes[0].size())
            throw DimensionError("sample '" + id + "' has axes of unequal length");
        if (!(sample_rate_hz > 0.0))
            throw RangeError("sample '" + id + "' has non-positive sample rate");
    }
};

/// Samples plus the sorted list of distinct class labels they use.
struct Dataset {
    std::vector<SensorSample> samples;
    std::vector<std::string> classes;

    /// Builds a dataset; classes are the distinct labels in lexicographic order.
    static Dataset from_samples(std::vector<SensorSample> samples) {
        std::set<std::string> labels;
        for (const auto& s : samples) labels.insert(s.label);
        Dataset ds;
        ds.samples = std::move(samples);
        ds.classes.assign(labels.begin(), labels.end());
        return ds;
    }

    /// Index of `label` in `classes`, or classes.size() if absent.
    std::size_t class_index(std::string_view label) const {
        auto it = std::lower_bound(classes.begin(), classes.end(), label);
        if (it != classes.end() && *it == label) return static_cast<std::size_t>(it - classes.begin());
        return classes.size();
    }

    /// Per-class sample counts in class order.
    std::vector<std::pair<std::string, std::size_t>> class_counts() const {
        std::vector<std::pair<std::string, std::size_t>> out;
        for (const auto& c : classes) out.emplace_back(c, 0);
        for (const auto& s : samples) ++out[class_index(s.label)].second;
        return out;
    }
};

/// Lowercase snake_case: letters and digits kept, every other run collapses to '_'.
inline std::string normalize_label(std::string_view raw) {
    std::string out;
    bool pending_sep = false;
    for (char ch : raw) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            if (pending_sep && !out.empty()) out.push_back('_');
            pending_sep = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_sep = true;
        }
    }
    return out;
}

/// Maps a 6-bit coded WHARF value onto [-1.5g, +1.5g] in m/s^2.
inline double decode_coded(int coded) {
    if (coded < 0 || coded > kMaxCoded)
        throw RangeError("coded value " + std::to_string(coded) + " outside [0, 63]");
    return -1.5 * kGravity + static_cast<double>(coded) * (3.0 * kGravity / kMaxCoded);
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IngestError("cannot read file " + path.string());
    return buf.str();
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (end == text.size() && line.empty()) break;
        fn(line, line_no);
        pos = end + 1;
    }
}

inline bool has_extension(const fs::path& p, std::string_view ext) {
    auto e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ext;
}

inline std::vector<fs::path> sorted_entries(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

/// Label encoded in a WHARF file name: Accelerometer-<date>-<time>-<label>-<subject>.txt
inline std::string label_from_wharf_name(const fs::path& file) {
    const std::string stem = file.stem().string();
    const auto last = stem.rfind('-');
    if (last == std::string::npos || last == 0) return {};
    const auto prev = stem.rfind('-', last - 1);
    if (prev == std::string::npos) return {};
    return normalize_label(stem.substr(prev + 1, last - prev - 1));
}

}  // namespace detail

/// Parses one WHARF recording (coded integer triplets, one per line). Blank lines are skipped.
inline SensorSample parse_wharf_file(const fs::path& file, std::string label) {
    const std::string text = detail::read_file(file);
    SensorSample sample;
    sample.id = file.stem().string();
    sample.label = std::move(label);
    sample.sample_rate_hz = kWharfRateHz;
    const std::string where = file.string();
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const auto tokens = detail::split_ws(line);
        if (tokens.empty()) return;
        if (tokens.size() != 3)
            throw ParseError(where + ":" + std::to_string(line_no) + ": expected 3 values, got " +
                             std::to_string(tokens.size()));
        for (std::size_t a = 0; a < 3; ++a) {
            int coded = 0;
            const auto tok = tokens[a];
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), coded);
            if (ec != std::errc() || ptr != tok.data() + tok.size())
                throw ParseError(where + ":" + std::to_string(line_no) + ": not an integer: '" +
                                 std::string(tok) + "'");
            if (coded < 0 || coded > kMaxCoded)
                throw RangeError(where + ":" + std::to_string(line_no) + ": coded value " +
                                 std::to_string(coded) + " outside [0, 63]");
            sample.axes[a].push_back(decode_coded(coded));
        }
    });
    if (sample.length() == 0) throw LengthError(where + ": recording has no samples");
    return sample;
}

/**
 * @brief Loads a WHARF tree.
 *
 * Every `.txt` file inside a class directory is one recording; the label is the normalized
 * directory name. Directories whose name ends in `_MODEL` hold copies of recordings and are
 * skipped. Files directly under `root` are accepted when they follow the
 * `Accelerometer-...-<label>-<subject>.txt` naming, with the label taken from the name.
 */
inline Dataset load_wharf(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IngestError("not a directory: " + root.string());

    std::vector<SensorSample> samples;
    for (const auto& entry : detail::sorted_entries(root)) {
        if (fs::is_directory(entry)) {
            const std::string label = normalize_label(entry.filename().string());
            if (label.empty() || label.ends_with("_model")) continue;
            for (const auto& file : detail::sorted_entries(entry)) {
                if (fs::is_regular_file(file) && detail::has_extension(file, ".txt"))
                    samples.push_back(parse_wharf_file(file, label));
            }
        } else if (fs::is_regular_file(entry) && detail::has_extension(entry, ".txt") &&
                   entry.filename().string().starts_with("Accelerometer-")) {
            std::string label = detail::label_from_wharf_name(entry);
            if (label.empty()) throw ParseError(entry.string() + ": cannot derive class label from name");
            samples.push_back(parse_wharf_file(entry, std::move(label)));
        }
    }
    return Dataset::from_samples(std::move(samples));
}

/// Parses one canonical CSV sample (header `label,x,y,z`).
inline SensorSample parse_csv_sample(const fs::path& file, double sample_rate_hz = kWharfRateHz) {
    const std::string text = detail::read_file(file);
    SensorSample sample;
    sample.id = file.stem().string();
    sample.sample_rate_hz = sample_rate_hz;
    const std::string where = file.string();
    bool header_seen = false;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) return;
        if (!header_seen) {
            if (line != "label,x,y,z")
                throw ParseError(where + ":" + std::to_string(line_no) + ": expected header 'label,x,y,z'");
            header_seen = true;
            return;
        }
        std::array<std::string_view, 4> fields;
        std::size_t n = 0, start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (n == 4) { n = 5; break; }
                fields[n++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (n != 4)
            throw ParseError(where + ":" + std::to_string(line_no) + ": expected 4 fields");
        const std::string label = normalize_label(fields[0]);
        if (label.empty()) throw ParseError(where + ":" + std::to_string(line_no) + ": empty label");
        if (sample.label.empty()) {
            sample.label = label;
        } else if (sample.label != label) {
            throw ParseError(where + ":" + std::to_string(line_no) + ": label changes within a sample");
        }
        for (std::size_t a = 0; a < 3; ++a) {
            double v = 0.0;
            const auto tok = fields[a + 1];
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
                throw ParseError(where + ":" + std::to_string(line_no) + ": not a number: '" +
                                 std::string(tok) + "'");
            sample.axes[a].push_back(v);
        }
    });
    if (!header_seen || sample.length() == 0) throw LengthError(where + ": sample has no rows");
    return sample;
}

/// Loads every `*.csv` below `root` (recursively, sorted by path) as one sample each.
inline Dataset load_csv_dir(const fs::path& root, double sample_rate_hz = kWharfRateHz) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IngestError("not a directory: " + root.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && detail::has_extension(entry.path(), ".csv"))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<SensorSample> samples;
    samples.reserve(files.size());
    for (const auto& f : files) samples.push_back(parse_csv_sample(f, sample_rate_hz));
    return Dataset::from_samples(std::move(samples));
}

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Writes `<dir>/<label>/<id>.csv` for every sample. Returns the written paths in sample order.
inline std::vector<fs::path> write_csv_dir(const Dataset& ds, const fs::path& dir) {
    std::vector<fs::path> written;
    std::set<fs::path> seen;
    for (const auto& s : ds.samples) {
        s.validate();
        const fs::path file = dir / s.label / (s.id + ".csv");
        if (!seen.insert(file).second) throw IngestError("duplicate sample id '" + s.id + "' in class " + s.label);
        fs::create_directories(file.parent_path());
        std::ofstream out(file, std::ios::binary);
        if (!out) throw IngestError("cannot write " + file.string());
        out << "label,x,y,z\n";
        for (std::size_t i = 0; i < s.length(); ++i)
            out << s.label << ',' << format_double(s.axes[0][i]) << ',' << format_double(s.axes[1][i])
                << ',' << format_double(s.axes[2][i]) << '\n';
        if (!out) throw IngestError("cannot write " + file.string());
        written.push_back(file);
    }
    return written;
}

/// Drops samples whose label is in `drop` and rebuilds the class list.
inline Dataset filter_classes(const Dataset& ds, const std::set<std::string>& drop) {
    std::vector<SensorSample> kept;
    for (const auto& s : ds.samples)
        if (!drop.contains(s.label)) kept.push_back(s);
    return Dataset::from_samples(std::move(kept));
}

}  // namespace rphar
