#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace exttilt {

/// Minimal RFC-4180 writer.  Provenance goes into leading '#' comment lines;
/// numbers are serialized with %.17g so identical runs produce identical bytes.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void comment(const std::string& line);
    void row(std::span<const std::string> fields);
    void row(std::initializer_list<std::string> fields);

    static std::string num(double v);
    static std::string num(long v);
    static std::string quote(const std::string& field);

  private:
    std::ostream& os_;
};

} // namespace exttilt
