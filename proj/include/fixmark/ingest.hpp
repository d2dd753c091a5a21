#pragma once
// Parsing and writing of the delimited eight-column fixation format:
// X, Y, Time, Fix., Subj., Colour, Image, Format.

#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "fixmark/data.hpp"

namespace fixmark {

enum class Delimiter { Comma, Whitespace };

struct IngestFormat {
    Delimiter delimiter = Delimiter::Comma;
    bool has_header = false;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_fields(const std::string& line, Delimiter delim) {
    std::vector<std::string> fields;
    if (delim == Delimiter::Comma) {
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (!line.empty() && line.back() == ',') fields.push_back("");
    } else {
        std::istringstream ss(line);
        std::string field;
        while (ss >> field) fields.push_back(field);
    }
    return fields;
}

inline double parse_real(const std::string& s, std::size_t line, const char* what) {
    double value = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(line, std::string("malformed ") + what + " '" + s + "'");
    }
    return value;
}

inline int parse_int(const std::string& s, std::size_t line, const char* what) {
    int value = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(line, std::string("malformed ") + what + " '" + s + "'");
    }
    return value;
}

// Shortest round-trip formatting, so serialize(parse(x)) is byte-stable.
inline std::string format_real(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_real failed");
    return std::string(buf, ptr);
}

} // namespace detail

// Parse the eight-column delimited stream into records. Errors carry the
// 1-based line number and the offending field.
inline std::vector<FixationRecord> parse_records(std::istream& in,
                                                 const IngestFormat& format = {}) {
    std::vector<FixationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = format.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto fields = detail::split_fields(line, format.delimiter);
        if (fields.size() != 8) {
            throw ParseError(line_no, "expected 8 fields, found " + std::to_string(fields.size()));
        }
        FixationRecord rec;
        rec.x = detail::parse_real(fields[0], line_no, "x");
        rec.y = detail::parse_real(fields[1], line_no, "y");
        rec.duration_ms = detail::parse_real(fields[2], line_no, "duration");
        if (!(rec.duration_ms > 0.0)) {
            throw ParseError(line_no, "non-positive duration at line " + std::to_string(line_no));
        }
        rec.fixation_index = detail::parse_int(fields[3], line_no, "fixation index");
        if (rec.fixation_index < 1) {
            throw ParseError(line_no, "fixation index must be >= 1, got " + fields[3]);
        }
        rec.subject_id = fields[4];
        if (rec.subject_id.empty()) throw ParseError(line_no, "empty subject id");
        const auto scheme = parse_colour_scheme(fields[5]);
        if (!scheme) throw ParseError(line_no, "unknown colour scheme token '" + fields[5] + "'");
        rec.colour_scheme = *scheme;
        rec.image_id = detail::parse_int(fields[6], line_no, "image id");
        if (rec.image_id < 1) throw ParseError(line_no, "image id must be >= 1, got " + fields[6]);
        const auto orientation = parse_orientation(fields[7]);
        if (!orientation) throw ParseError(line_no, "unknown orientation token '" + fields[7] + "'");
        rec.orientation = *orientation;
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<FixationRecord> parse_records(const std::string& text,
                                                 const IngestFormat& format = {}) {
    std::istringstream in(text);
    return parse_records(in, format);
}

inline void serialize_record(std::ostream& out, const FixationRecord& rec,
                             const IngestFormat& format = {}) {
    const char* sep = format.delimiter == Delimiter::Comma ? "," : " ";
    out << detail::format_real(rec.x) << sep
        << detail::format_real(rec.y) << sep
        << detail::format_real(rec.duration_ms) << sep
        << rec.fixation_index << sep
        << rec.subject_id << sep
        << to_token(rec.colour_scheme) << sep
        << rec.image_id << sep
        << to_token(rec.orientation) << "\n";
}

inline std::string serialize_records(const std::vector<FixationRecord>& records,
                                     const IngestFormat& format = {}) {
    std::ostringstream out;
    if (format.has_header) {
        const char* sep = format.delimiter == Delimiter::Comma ? "," : " ";
        out << "x" << sep << "y" << sep << "time" << sep << "fix" << sep << "subj" << sep
            << "colour" << sep << "image" << sep << "format" << "\n";
    }
    for (const auto& rec : records) serialize_record(out, rec, format);
    return out.str();
}

// Flatten a dataset back to records, in sequence order.
inline std::vector<FixationRecord> to_records(const Dataset& dataset) {
    std::vector<FixationRecord> records;
    for (const auto& seq : dataset.sequences()) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            FixationRecord rec;
            rec.x = seq.points[i].x;
            rec.y = seq.points[i].y;
            rec.duration_ms = seq.durations[i];
            rec.fixation_index = seq.fixation_indices[i];
            rec.subject_id = seq.subject_id;
            rec.colour_scheme = seq.colour_scheme;
            rec.image_id = seq.image_id;
            rec.orientation = seq.orientation;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

} // namespace fixmark
