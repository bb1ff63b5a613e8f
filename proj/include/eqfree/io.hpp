#pragma once
// Plain-text result plumbing: CSV assembly with '#' comment metadata, float
// formatting that round-trips doubles, and small file helpers.

#include <string>
#include <vector>

namespace eqfree {

/// Decimal form of v that parses back to exactly the same double (%.17g).
std::string format_float(double v);

struct KeyValue {
  std::string key;
  std::string value;
};

/// Incremental CSV document: comment lines first-come-first-serve, a header
/// row, data rows, and blank separator lines.  The byte stream is fully
/// determined by the call sequence.
class CsvWriter {
 public:
  void comment(const std::string& line);
  void meta(const std::vector<KeyValue>& kvs);
  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);
  void row_cells(const std::vector<std::string>& cells);
  void blank();
  [[nodiscard]] const std::string& text() const { return out_; }

 private:
  std::string out_;
};

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Current UTC time, ISO-8601 (second resolution).  Used for the single
/// timestamp comment that reruns are allowed to differ by.
std::string utc_timestamp();

}  // namespace eqfree
