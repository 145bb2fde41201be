#ifndef SURFDYN_REPORT_IO_HPP
#define SURFDYN_REPORT_IO_HPP

#include <string>
#include <vector>

namespace surfdyn {

/// shortest round-trip decimal representation (deterministic across runs)
std::string format_double(double v);

/** RFC-4180-style CSV accumulator: stable column ordering, quoting only when
    needed, LF line endings. */
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(std::vector<std::string> fields);
    const std::string& text() const { return text_; }
    void write(const std::string& path) const;
    int rows() const { return rows_; }

private:
    std::string text_;
    size_t columns_;
    int rows_ = 0;
};

void write_text_file(const std::string& path, const std::string& content);

} // namespace surfdyn

#endif
