#pragma once

#include <iosfwd>
#include <string>

#include "sparse.hpp"

namespace pclab {

// Reads a Matrix Market coordinate file, real field, general or
// symmetric. Symmetric files store the lower triangle and are expanded
// to full storage here. Malformed input throws FormatError with the
// 1-based line number.
SparseCoo read_matrix_market(std::istream& in);
SparseCoo read_matrix_market_file(const std::string& path);

// Writes coordinate real output. A square matrix with symmetric values
// is written as `symmetric` (lower triangle only), everything else as
// `general`. Values are round-trip exact (%.17g). A nonempty comment is
// emitted as % lines after the banner.
void write_matrix_market(std::ostream& out, const SparseCoo& a,
                         const std::string& comment = "");
void write_matrix_market_file(const std::string& path, const SparseCoo& a,
                              const std::string& comment = "");

}  // namespace pclab
