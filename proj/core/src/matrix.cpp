#include "bsg/matrix.hpp"

#include "bsg/error.hpp"
#include "binary_io.hpp"
#include "text.hpp"

#include <fstream>
#include <vector>

namespace bsg {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Matrix read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open matrix file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = detail::trim(line);
        if (body.empty()) continue;
        std::vector<double> row;
        for (auto field : detail::split_on(body, ',')) {
            auto v = detail::parse_double(detail::trim(field));
            if (!v) throw ParseError(path, lineno, "malformed number");
            row.push_back(*v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(path, lineno, "row width differs from first row");
        }
        rows.push_back(std::move(row));
    }
    const auto cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

}  // namespace

namespace detail {

Matrix read_matrix_body(std::istream& in, const std::string& path) {
    std::string header;
    if (!std::getline(in, header)) throw Error(path + ": missing matrix header");
    auto fields = split_fields(header);
    if (fields.size() != 2) throw Error(path + ": matrix header must be 'rows cols'");
    auto rows = parse_uint(fields[0]);
    auto cols = parse_uint(fields[1]);
    if (!rows || !cols) throw Error(path + ": malformed matrix header");
    std::vector<float> buf(*rows * *cols);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float)) {
        throw Error(path + ": truncated matrix body");
    }
    Matrix m(*rows, *cols);
    for (std::size_t i = 0; i < buf.size(); ++i) m.data()[i] = static_cast<double>(buf[i]);
    return m;
}

void write_matrix_body(std::ostream& out, const Matrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    std::vector<float> buf(static_cast<std::size_t>(m.size()));
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(m.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

}  // namespace detail

Matrix read_matrix(const std::string& path) {
    if (ends_with(path, ".csv")) return read_csv(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open matrix file '" + path + "'");
    return detail::read_matrix_body(in, path);
}

void write_matrix(const Matrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write matrix file '" + path + "'");
    detail::write_matrix_body(out, m);
}

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

}  // namespace bsg
