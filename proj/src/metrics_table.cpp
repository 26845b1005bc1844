#include "nlar/metrics_table.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "nlar/errors.hpp"

namespace nlar {

namespace {

constexpr const char* kHeader = "method,horizon,msd,mspe,cvr,len,n_effective";

void put(std::string& out, const std::optional<double>& v) {
    out += ',';
    if (!v) return;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    out += buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::optional<double> cell_value(const std::string& cell, std::size_t line_no) {
    if (cell.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + cell + "'");
    }
}

}  // namespace

const MetricsRow* MetricsTable::find(const std::string& method, int horizon) const {
    const auto it = rows_.find({method, horizon});
    return it == rows_.end() ? nullptr : &it->second;
}

std::string format_table(const MetricsTable& table) {
    std::string out = kHeader;
    out += '\n';
    for (const auto& [key, row] : table.rows()) {
        out += key.first;
        out += ',';
        out += std::to_string(key.second);
        put(out, row.msd);
        put(out, row.mspe);
        put(out, row.cvr);
        put(out, row.len);
        out += ',';
        out += std::to_string(row.n_effective);
        out += '\n';
    }
    return out;
}

MetricsTable parse_table(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw ParseError("metrics table: missing or wrong header");
    MetricsTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 7) throw ParseError("line " + std::to_string(line_no) + ": expected 7 cells");
        int horizon = 0;
        try {
            horizon = std::stoi(cells[1]);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad horizon '" + cells[1] + "'");
        }
        MetricsRow& row = table.at(cells[0], horizon);
        row.msd = cell_value(cells[2], line_no);
        row.mspe = cell_value(cells[3], line_no);
        row.cvr = cell_value(cells[4], line_no);
        row.len = cell_value(cells[5], line_no);
        const auto n = cell_value(cells[6], line_no);
        if (!n || *n < 0) throw ParseError("line " + std::to_string(line_no) + ": bad n_effective");
        row.n_effective = static_cast<std::size_t>(*n);
    }
    return table;
}

void export_table(const MetricsTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << format_table(table);
    if (!out) throw IoError("failed writing '" + path + "'");
}

MetricsTable read_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_table(buf.str());
}

}  // namespace nlar
