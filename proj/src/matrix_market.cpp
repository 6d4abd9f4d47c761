#include "matrix_market.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "error.hpp"

namespace pclab {

namespace {

[[noreturn]] void fail(long line, const std::string& what) {
    throw FormatError("matrix market, line " + std::to_string(line) + ": " + what);
}

std::string lowered(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

SparseCoo read_matrix_market(std::istream& in) {
    std::string line;
    long lineno = 0;

    if (!std::getline(in, line)) fail(1, "empty input");
    ++lineno;
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") fail(lineno, "missing %%MatrixMarket banner");
    if (lowered(object) != "matrix") fail(lineno, "unsupported object '" + object + "'");
    if (lowered(format) != "coordinate")
        fail(lineno, "unsupported format '" + format + "'");
    if (lowered(field) != "real") fail(lineno, "unsupported field '" + field + "'");
    const std::string sym = lowered(symmetry);
    if (sym != "general" && sym != "symmetric")
        fail(lineno, "unsupported symmetry '" + symmetry + "'");
    const bool symmetric = sym == "symmetric";

    // Size line: first non-comment line after the banner.
    Index n_rows = 0, n_cols = 0, nnz = 0;
    for (;;) {
        if (!std::getline(in, line)) fail(lineno + 1, "missing size line");
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream sizes(line);
        if (!(sizes >> n_rows >> n_cols >> nnz)) fail(lineno, "bad size line");
        std::string extra;
        if (sizes >> extra) fail(lineno, "trailing tokens on size line");
        break;
    }
    if (n_rows < 0 || n_cols < 0 || nnz < 0) fail(lineno, "negative size");
    if (symmetric && n_rows != n_cols) fail(lineno, "symmetric matrix not square");

    std::vector<Index> rows, cols;
    std::vector<double> values;
    rows.reserve(static_cast<std::size_t>(nnz));
    cols.reserve(static_cast<std::size_t>(nnz));
    values.reserve(static_cast<std::size_t>(nnz));

    Index seen = 0;
    while (seen < nnz) {
        if (!std::getline(in, line))
            fail(lineno + 1, "expected " + std::to_string(nnz) + " entries, got " +
                                 std::to_string(seen));
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream entry(line);
        Index i = 0, j = 0;
        double v = 0.0;
        if (!(entry >> i >> j >> v)) fail(lineno, "bad entry line");
        std::string extra;
        if (entry >> extra) fail(lineno, "trailing tokens on entry line");
        if (i < 1 || i > n_rows || j < 1 || j > n_cols)
            fail(lineno, "index out of range");
        if (symmetric && j > i)
            fail(lineno, "upper triangle entry in symmetric file");
        rows.push_back(i - 1);
        cols.push_back(j - 1);
        values.push_back(v);
        if (symmetric && i != j) {
            rows.push_back(j - 1);
            cols.push_back(i - 1);
            values.push_back(v);
        }
        ++seen;
    }

    try {
        return make_coo(n_rows, n_cols, std::move(rows), std::move(cols),
                        std::move(values));
    } catch (const FormatError& e) {
        throw FormatError(std::string("matrix market: ") + e.what());
    }
}

SparseCoo read_matrix_market_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const SparseCoo& a,
                         const std::string& comment) {
    a.validate();
    const bool symmetric = a.n_rows == a.n_cols && is_symmetric(a);
    out << "%%MatrixMarket matrix coordinate real "
        << (symmetric ? "symmetric" : "general") << "\n";
    if (!comment.empty()) {
        std::istringstream lines(comment);
        std::string c;
        while (std::getline(lines, c)) out << "% " << c << "\n";
    }

    Index nnz = a.nnz();
    if (symmetric) {
        nnz = 0;
        for (std::size_t k = 0; k < a.values.size(); ++k)
            if (a.rows[k] >= a.cols[k]) ++nnz;
    }
    out << a.n_rows << " " << a.n_cols << " " << nnz << "\n";

    char buf[64];
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        if (symmetric && a.rows[k] < a.cols[k]) continue;
        std::snprintf(buf, sizeof(buf), "%.17g", a.values[k]);
        out << (a.rows[k] + 1) << " " << (a.cols[k] + 1) << " " << buf << "\n";
    }
    if (!out) throw IoError("matrix market write failed");
}

void write_matrix_market_file(const std::string& path, const SparseCoo& a,
                              const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_matrix_market(out, a, comment);
}

}  // namespace pclab
