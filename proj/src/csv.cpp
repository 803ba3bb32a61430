#include "drfd/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace drfd {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    return out;
}

double parse_double(const std::string& s, const std::string& path) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path + ": cannot parse number '" + s + "'");
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Matrix load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    int r = 0, c = 0;
    if (std::sscanf(line.c_str(), "# dim=%dx%d", &r, &c) != 2 || r <= 0 || c <= 0)
        throw ParseError(path + ": missing '# dim=<r>x<c>' header");
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        if (!std::getline(in, line))
            throw ParseError(path + ": expected " + std::to_string(r) + " rows");
        auto fields = split(line, ',');
        if (static_cast<int>(fields.size()) != c)
            throw ParseError(path + ": row " + std::to_string(i) + " has wrong arity");
        for (int j = 0; j < c; ++j) m(i, j) = parse_double(fields[j], path);
    }
    return m;
}

void save_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "# dim=" << m.rows() << "x" << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << format_double(m(i, j));
        }
        out << "\n";
    }
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    Dataset d;
    d.columns = split(line, ',');
    std::vector<std::vector<double>> data;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != d.columns.size())
            throw ParseError(path + ": row arity mismatch");
        std::vector<double> row;
        row.reserve(fields.size());
        for (auto& f : fields) row.push_back(parse_double(f, path));
        data.push_back(std::move(row));
    }
    d.rows.resize(static_cast<Eigen::Index>(data.size()),
                  static_cast<Eigen::Index>(d.columns.size()));
    for (size_t i = 0; i < data.size(); ++i)
        for (size_t j = 0; j < data[i].size(); ++j)
            d.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
    return d;
}

void save_dataset_csv(const std::string& path, const Dataset& d) {
    if (static_cast<Eigen::Index>(d.columns.size()) != d.rows.cols())
        throw InvalidInput("save_dataset_csv: column count mismatch");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (size_t j = 0; j < d.columns.size(); ++j) {
        if (j) out << ",";
        out << d.columns[j];
    }
    out << "\n";
    for (Eigen::Index i = 0; i < d.rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.rows.cols(); ++j) {
            if (j) out << ",";
            out << format_double(d.rows(i, j));
        }
        out << "\n";
    }
}

}  // namespace drfd
