#pragma once

// Streamlines, seeds, and their text formats (TSL1 and seed lists).

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fanfilter/binary_io.hpp"
#include "fanfilter/error.hpp"
#include "fanfilter/tensor.hpp"

namespace fanfilter {

enum class Termination { none, wm_exit, angle_fail, bounds, divergence, max_steps };

inline constexpr Termination kTrackingReasons[] = {Termination::wm_exit, Termination::angle_fail, Termination::bounds,
                                                   Termination::divergence, Termination::max_steps};

inline const char* reason_name(Termination t) {
    switch (t) {
        case Termination::none: return "none";
        case Termination::wm_exit: return "wm-exit";
        case Termination::angle_fail: return "angle-fail";
        case Termination::bounds: return "bounds";
        case Termination::divergence: return "divergence";
        case Termination::max_steps: return "max-steps";
    }
    return "none";
}

inline bool parse_reason(const std::string& s, Termination& out) {
    for (Termination t : {Termination::none, Termination::wm_exit, Termination::angle_fail, Termination::bounds,
                          Termination::divergence, Termination::max_steps})
        if (s == reason_name(t)) {
            out = t;
            return true;
        }
    return false;
}

struct Streamline {
    std::vector<Vec3> points;
    Termination reason = Termination::none;

    double length() const {
        double l = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i) l += (points[i] - points[i - 1]).norm();
        return l;
    }
};

struct Seed {
    Vec3 position = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();
};

namespace detail {

inline void put_xyz(std::string& out, double a, double b, double c) {
    char buf[128];
    const int n = std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f", a, b, c);
    out.append(buf, static_cast<std::size_t>(n));
}

/// Line-oriented reader that knows the byte offset of the current line.
class LineReader {
public:
    explicit LineReader(std::string text) : text_(std::move(text)) {}
    bool next(std::string& line) {
        if (pos_ >= text_.size()) return false;
        line_start_ = pos_;
        const auto nl = text_.find('\n', pos_);
        const std::size_t end = nl == std::string::npos ? text_.size() : nl;
        line = text_.substr(pos_, end - pos_);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos_ = nl == std::string::npos ? text_.size() : nl + 1;
        return true;
    }
    std::size_t line_offset() const { return line_start_; }
    std::size_t offset() const { return pos_; }

private:
    std::string text_;
    std::size_t pos_ = 0, line_start_ = 0;
};

inline std::string read_text(const std::string& path) {
    const auto bytes = binary::read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

inline void write_text(const std::string& path, const std::string& text) {
    binary::write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
}

inline Vec3 parse_xyz(const std::string& line, std::size_t at) {
    std::istringstream is(line);
    Vec3 v;
    std::string extra;
    if (!(is >> v.x() >> v.y() >> v.z()) || (is >> extra))
        throw FormatError("expected three coordinates, got '" + line + "'", at);
    if (!v.allFinite()) throw FormatError("non-finite coordinate", at);
    return v;
}

}  // namespace detail

inline std::string format_tsl(const std::vector<Streamline>& s) {
    std::string out = "TSL1 " + std::to_string(s.size()) + "\n";
    for (const auto& sl : s) {
        out += "S " + std::to_string(sl.points.size()) + " " + reason_name(sl.reason) + "\n";
        for (const auto& p : sl.points) {
            detail::put_xyz(out, p.x(), p.y(), p.z());
            out += '\n';
        }
    }
    return out;
}

inline std::vector<Streamline> parse_tsl(std::string text) {
    detail::LineReader lr(std::move(text));
    std::string line;
    if (!lr.next(line)) throw FormatError("empty streamline file", 0);
    std::size_t count = 0;
    {
        std::istringstream is(line);
        std::string magic, extra;
        if (!(is >> magic >> count) || magic != "TSL1" || (is >> extra))
            throw FormatError("expected header 'TSL1 <count>'", 0);
    }
    std::vector<Streamline> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!lr.next(line)) throw FormatError("missing streamline " + std::to_string(i), lr.offset());
        std::istringstream is(line);
        std::string tag, reason, extra;
        long long n = -1;
        Streamline sl;
        if (!(is >> tag >> n >> reason) || tag != "S" || n < 0 || (is >> extra) || !parse_reason(reason, sl.reason))
            throw FormatError("expected 'S <n> <reason>', got '" + line + "'", lr.line_offset());
        sl.points.reserve(static_cast<std::size_t>(n));
        for (long long k = 0; k < n; ++k) {
            if (!lr.next(line)) throw FormatError("truncated streamline " + std::to_string(i), lr.offset());
            sl.points.push_back(detail::parse_xyz(line, lr.line_offset()));
        }
        out.push_back(std::move(sl));
    }
    while (lr.next(line))
        if (line.find_first_not_of(" \t") != std::string::npos)
            throw FormatError("trailing content after last streamline", lr.line_offset());
    return out;
}

inline void write_tsl(const std::string& path, const std::vector<Streamline>& s) {
    detail::write_text(path, format_tsl(s));
}
inline std::vector<Streamline> read_tsl(const std::string& path) { return parse_tsl(detail::read_text(path)); }

inline std::string format_seeds(const std::vector<Seed>& seeds) {
    std::string out;
    for (const auto& s : seeds) {
        detail::put_xyz(out, s.position.x(), s.position.y(), s.position.z());
        out += ' ';
        detail::put_xyz(out, s.direction.x(), s.direction.y(), s.direction.z());
        out += '\n';
    }
    return out;
}

/// Directions are normalized after parsing (the text carries 6 decimals).
inline std::vector<Seed> parse_seeds(std::string text) {
    detail::LineReader lr(std::move(text));
    std::string line;
    std::vector<Seed> out;
    while (lr.next(line)) {
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream is(line);
        Seed s;
        std::string extra;
        if (!(is >> s.position.x() >> s.position.y() >> s.position.z() >> s.direction.x() >> s.direction.y() >>
              s.direction.z()) ||
            (is >> extra))
            throw FormatError("expected 'x y z dx dy dz', got '" + line + "'", lr.line_offset());
        const double n = s.direction.norm();
        if (!s.position.allFinite() || !(n > 0.0) || !std::isfinite(n))
            throw FormatError("invalid seed", lr.line_offset());
        s.direction /= n;
        out.push_back(s);
    }
    return out;
}

inline void write_seeds(const std::string& path, const std::vector<Seed>& s) {
    detail::write_text(path, format_seeds(s));
}
inline std::vector<Seed> read_seeds(const std::string& path) { return parse_seeds(detail::read_text(path)); }

}  // namespace fanfilter
