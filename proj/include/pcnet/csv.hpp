#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace pcnet {

// Round-trip formatting with 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_escape(const std::string &s) {
    if(s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string r = "\"";
    for(char c : s) {
        if(c == '"') r += '"';
        r += c;
    }
    return r + "\"";
}

using CsvCell = std::variant<double, long long, std::string>;

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<CsvCell> row) {
        if(row.size() != header_.size()) throw std::invalid_argument("csv row width does not match header");
        rows_.push_back(std::move(row));
    }

    std::size_t size() const { return rows_.size(); }

    std::string str() const {
        std::ostringstream o;
        line(o, header_);
        for(const auto &r : rows_) {
            std::vector<std::string> cells;
            for(const auto &c : r) {
                if(auto d = std::get_if<double>(&c)) cells.push_back(fmt17(*d));
                else if(auto i = std::get_if<long long>(&c)) cells.push_back(std::to_string(*i));
                else cells.push_back(std::get<std::string>(c));
            }
            line(o, cells);
        }
        return o.str();
    }

    void write(const std::string &path) const {
        std::ofstream f(path, std::ios::binary);
        if(!f) throw std::runtime_error("cannot write " + path);
        f << str();
    }

private:
    static void line(std::ostringstream &o, const std::vector<std::string> &cells) {
        for(std::size_t i = 0; i < cells.size(); ++i) o << (i ? "," : "") << csv_escape(cells[i]);
        o << "\r\n";
    }
    std::vector<std::string> header_;
    std::vector<std::vector<CsvCell>> rows_;
};

} // namespace pcnet
