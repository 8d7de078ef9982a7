#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "abex/experiment.hpp"

namespace abex {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    out.close();
    if (!out) throw std::runtime_error("error writing '" + path.string() + "'");
}

double parse_number(const std::string& field, std::size_t line) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    if (ec != std::errc() || ptr != last)
        throw std::invalid_argument("csv line " + std::to_string(line) + ": bad number '" + field + "'");
    return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) fields.push_back(field);
    if (!line.empty() && line.back() == sep) fields.emplace_back();
    return fields;
}

std::string csv_quote(const std::string& text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string tick_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<double> pointwise(const ResultTable& table, const std::string& curve, bool variance) {
    std::vector<const Series*> members;
    for (const auto& s : table.series)
        if (s.curve == curve) members.push_back(&s);
    if (members.empty()) throw std::invalid_argument("ResultTable: no series for curve '" + curve + "'");
    std::vector<double> out(table.x.size());
    std::vector<double> samples(members.size());
    for (std::size_t i = 0; i < table.x.size(); ++i) {
        for (std::size_t k = 0; k < members.size(); ++k) samples[k] = members[k]->values.at(i);
        std::sort(samples.begin(), samples.end());
        double sum = 0.0;
        for (double v : samples) sum += v;
        const double mean = sum / static_cast<double>(samples.size());
        if (!variance) {
            out[i] = mean;
            continue;
        }
        std::vector<double> sq(samples.size());
        for (std::size_t k = 0; k < samples.size(); ++k) sq[k] = (samples[k] - mean) * (samples[k] - mean);
        std::sort(sq.begin(), sq.end());
        double total = 0.0;
        for (double v : sq) total += v;
        out[i] = total / static_cast<double>(samples.size());
    }
    return out;
}

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[64];
    // Integral values such as step counts print as plain digits.
    const bool integral = std::abs(value) < 1e15 && value == std::trunc(value);
    auto [ptr, ec] = integral ? std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed)
                              : std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

std::vector<std::string> ResultTable::curves() const {
    std::vector<std::string> names;
    for (const auto& s : series)
        if (std::find(names.begin(), names.end(), s.curve) == names.end()) names.push_back(s.curve);
    return names;
}

std::vector<double> ResultTable::mean(const std::string& curve) const { return pointwise(*this, curve, false); }

std::vector<double> ResultTable::variance(const std::string& curve) const { return pointwise(*this, curve, true); }

void ResultTable::validate() const {
    if (series.empty()) throw std::invalid_argument("ResultTable '" + metric + "': no series");
    for (const auto& s : series) {
        if (s.values.size() != x.size())
            throw std::invalid_argument("ResultTable '" + metric + "': series (" + s.curve + ", " +
                                        std::to_string(s.seed) + ") has " + std::to_string(s.values.size()) +
                                        " values for " + std::to_string(x.size()) + " x points");
        if (s.curve.find_first_of(",\"\n\r") != std::string::npos)
            throw std::invalid_argument("ResultTable: curve name '" + s.curve + "' cannot be written to CSV");
    }
}

std::string format_csv(const ResultTable& table) {
    table.validate();
    std::string out = "x,curve,seed,value\n";
    for (const auto& s : table.series)
        for (std::size_t i = 0; i < table.x.size(); ++i)
            out += format_double(table.x[i]) + "," + s.curve + "," + std::to_string(s.seed) + "," +
                   format_double(s.values[i]) + "\n";
    for (const auto& curve : table.curves()) {
        const auto m = table.mean(curve);
        const auto v = table.variance(curve);
        for (std::size_t i = 0; i < table.x.size(); ++i)
            out += format_double(table.x[i]) + "," + curve + ",mean," + format_double(m[i]) + "\n";
        for (std::size_t i = 0; i < table.x.size(); ++i)
            out += format_double(table.x[i]) + "," + curve + ",var," + format_double(v[i]) + "\n";
    }
    return out;
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) { write_file(path, format_csv(table)); }

ResultTable parse_csv(const std::string& text, const std::string& metric) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "x,curve,seed,value")
        throw std::invalid_argument("csv: expected header 'x,curve,seed,value'");
    ResultTable table;
    table.metric = metric;
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> summaries;
    std::size_t line_no = 1;
    Series* current = nullptr;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 4) throw std::invalid_argument("csv line " + std::to_string(line_no) + ": expected 4 fields");
        const double x = parse_number(fields[0], line_no);
        const double value = parse_number(fields[3], line_no);
        if (fields[2] == "mean" || fields[2] == "var") {
            summaries[{fields[1], fields[2]}].push_back({x, value});
            continue;
        }
        std::uint64_t seed = 0;
        auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), seed);
        if (ec != std::errc() || ptr != fields[2].data() + fields[2].size())
            throw std::invalid_argument("csv line " + std::to_string(line_no) + ": bad seed '" + fields[2] + "'");
        if (current == nullptr || current->curve != fields[1] || current->seed != seed) {
            for (const auto& s : table.series)
                if (s.curve == fields[1] && s.seed == seed)
                    throw std::invalid_argument("csv line " + std::to_string(line_no) + ": series rows not contiguous");
            table.series.push_back({fields[1], seed, {}});
            current = &table.series.back();
            if (table.series.size() > 1 && table.x.empty())
                throw std::invalid_argument("csv: inconsistent x values");
        }
        const std::size_t index = current->values.size();
        if (table.series.size() == 1) {
            table.x.push_back(x);
        } else if (index >= table.x.size() || table.x[index] != x) {
            throw std::invalid_argument("csv line " + std::to_string(line_no) + ": x does not match the first series");
        }
        current->values.push_back(value);
    }
    table.validate();
    for (const auto& curve : table.curves()) {
        const auto m = table.mean(curve);
        const auto v = table.variance(curve);
        for (const auto& [kind, expected] : {std::pair{std::string("mean"), m}, std::pair{std::string("var"), v}}) {
            auto it = summaries.find({curve, kind});
            if (it == summaries.end()) continue;
            const auto& rows = it->second;
            if (rows.size() != expected.size())
                throw std::invalid_argument("csv: " + kind + " rows of '" + curve + "' do not match the series");
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (rows[i].first != table.x[i] || rows[i].second != expected[i])
                    throw std::invalid_argument("csv: " + kind + " of '" + curve + "' disagrees with its series");
        }
    }
    return table;
}

ResultTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), path.stem().string());
}

std::string format_svg(const ResultTable& table) {
    table.validate();
    const double width = 720, height = 480;
    const double left = 80, right = 180, top = 40, bottom = 60;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    const bool log_x = table.log_x && std::all_of(table.x.begin(), table.x.end(), [](double v) { return v > 0; });
    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    double x_lo = tx(*std::min_element(table.x.begin(), table.x.end()));
    double x_hi = tx(*std::max_element(table.x.begin(), table.x.end()));
    if (x_hi <= x_lo) {
        x_lo -= 1.0;
        x_hi += 1.0;
    }

    const auto names = table.curves();
    std::vector<std::vector<double>> means, sds;
    double y_lo = std::numeric_limits<double>::infinity(), y_hi = -y_lo;
    for (const auto& name : names) {
        means.push_back(table.mean(name));
        auto var = table.variance(name);
        for (auto& v : var) v = std::sqrt(v);
        sds.push_back(var);
        for (std::size_t i = 0; i < table.x.size(); ++i) {
            y_lo = std::min(y_lo, means.back()[i] - sds.back()[i]);
            y_hi = std::max(y_hi, means.back()[i] + sds.back()[i]);
        }
    }
    if (!std::isfinite(y_lo) || !std::isfinite(y_hi)) {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if (y_hi <= y_lo) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    auto px = [&](double v) { return left + (tx(v) - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double v) { return top + (y_hi - std::clamp(v, y_lo, y_hi)) / (y_hi - y_lo) * plot_h; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << xml_escape(table.metric) << "</text>\n";

    // Axes and ticks.
    svg << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n"
        << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top + plot_h) << "\" x2=\"" << fixed(left + plot_w)
        << "\" y2=\"" << fixed(top + plot_h) << "\"/>\n"
        << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(left) << "\" y2=\""
        << fixed(top + plot_h) << "\"/>\n</g>\n";
    svg << "<g class=\"ticks\" fill=\"black\">\n";
    std::vector<double> x_ticks;
    if (log_x) {
        for (double e = std::ceil(x_lo - 1e-9); e <= x_hi + 1e-9; e += 1.0) x_ticks.push_back(std::pow(10.0, e));
    } else {
        for (int i = 0; i <= 5; ++i) x_ticks.push_back(x_lo + (x_hi - x_lo) * i / 5.0);
    }
    for (double v : x_ticks) {
        const double x = px(v);
        svg << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(top + plot_h) << "\" x2=\"" << fixed(x) << "\" y2=\""
            << fixed(top + plot_h + 5) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(top + plot_h + 18) << "\" text-anchor=\"middle\">"
            << tick_label(v) << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double v = y_lo + (y_hi - y_lo) * i / 5.0;
        const double y = py(v);
        svg << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(left) << "\" y2=\""
            << fixed(y) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">"
            << tick_label(v) << "</text>\n";
    }
    svg << "</g>\n";
    svg << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"" << fixed(height - 15)
        << "\" text-anchor=\"middle\">" << xml_escape(table.x_label) << (log_x ? " (log scale)" : "") << "</text>\n"
        << "<text transform=\"translate(20 " << fixed(top + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << xml_escape(table.y_label) << "</text>\n";

    for (std::size_t c = 0; c < names.size(); ++c) {
        const char* color = kPalette[c % kPalette.size()];
        const auto& m = means[c];
        const auto& sd = sds[c];
        svg << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < m.size(); ++i) svg << fixed(px(table.x[i])) << "," << fixed(py(m[i] + sd[i])) << " ";
        for (std::size_t i = m.size(); i-- > 0;) svg << fixed(px(table.x[i])) << "," << fixed(py(m[i] - sd[i])) << " ";
        svg << "\"/>\n";
        svg << "<polyline class=\"curve\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < m.size(); ++i) svg << (i ? " " : "") << fixed(px(table.x[i])) << "," << fixed(py(m[i]));
        svg << "\"/>\n";
        if (m.size() == 1)
            svg << "<circle cx=\"" << fixed(px(table.x[0])) << "\" cy=\"" << fixed(py(m[0])) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(c) + 8.0;
        svg << "<line x1=\"" << fixed(left + plot_w + 15) << "\" y1=\"" << fixed(ly) << "\" x2=\""
            << fixed(left + plot_w + 35) << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << fixed(left + plot_w + 40) << "\" y=\"" << fixed(ly + 4) << "\">" << xml_escape(names[c])
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void emit_svg(const ResultTable& table, const std::filesystem::path& path) { write_file(path, format_svg(table)); }

void emit_checks_csv(const std::vector<CheckRow>& checks, const std::filesystem::path& path) {
    std::string out = "name,measured,expected,tolerance,pass,detail\n";
    for (const auto& r : checks)
        out += csv_quote(r.name) + "," + format_double(r.measured) + "," + format_double(r.expected) + "," +
               format_double(r.tolerance) + "," + (r.pass ? "true" : "false") + "," + csv_quote(r.detail) + "\n";
    write_file(path, out);
}

std::vector<std::filesystem::path> write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::vector<std::filesystem::path> written;
    for (const auto& table : result.tables) {
        const auto csv = dir / (table.metric + ".csv");
        const auto svg = dir / (table.metric + ".svg");
        emit_csv(table, csv);
        emit_svg(table, svg);
        written.push_back(csv);
        written.push_back(svg);
    }
    if (!result.checks.empty()) {
        const auto path = dir / "checks.csv";
        emit_checks_csv(result.checks, path);
        written.push_back(path);
    }
    return written;
}

}  // namespace abex
