#ifndef SOFTPEN_ERRORS_HPP
#define SOFTPEN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace softpen {

struct zero_row_error : std::runtime_error {
  int row;
  explicit zero_row_error(int i)
      : std::runtime_error("constraint row " + std::to_string(i) +
                           " has (near-)zero norm"),
        row(i) {}
};

struct index_out_of_range : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct convergence_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct delta_zero_error : std::invalid_argument {
  delta_zero_error()
      : std::invalid_argument("gradient oracle requires delta > 0") {}
};

struct invalid_params : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct out_of_validity_range : std::domain_error {
  using std::domain_error::domain_error;
};

struct unsupported_prox : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct step_too_large : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct non_finite_iterate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_target : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct out_of_box : std::domain_error {
  using std::domain_error::domain_error;
};

struct conjugate_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct tolerance_not_reached : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct parse_error : std::runtime_error {
  int line;
  int column;
  parse_error(int ln, int col, const std::string &reason)
      : std::runtime_error("parse error at line " + std::to_string(ln) +
                           ", column " + std::to_string(col) + ": " + reason),
        line(ln), column(col) {}
};

struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct data_file_missing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace softpen

#endif
