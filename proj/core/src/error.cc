#include "jointgrade/error.h"

#include <sstream>

namespace jointgrade {

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

ShapeError::ShapeError(std::string op, std::vector<std::size_t> lhs,
                       std::vector<std::size_t> rhs)
    : Error(op + ": incompatible shapes " + shape_to_string(lhs) + " and " +
            shape_to_string(rhs)),
      op_(std::move(op)),
      lhs_(std::move(lhs)),
      rhs_(std::move(rhs)) {}

namespace {

std::string parse_message(const std::string& message, std::size_t row,
                          const std::string& column) {
  std::string out = message;
  if (row) out += " (row " + std::to_string(row);
  if (!column.empty()) out += row ? ", column '" + column + "'" : " (column '" + column + "'";
  if (row || !column.empty()) out += ")";
  return out;
}

}  // namespace

ParseError::ParseError(const std::string& message, std::size_t row,
                       std::string column)
    : Error(parse_message(message, row, column)),
      row_(row),
      column_(std::move(column)) {}

}  // namespace jointgrade
