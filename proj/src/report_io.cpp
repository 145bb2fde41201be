#include "surfdyn/report_io.hpp"
#include "surfdyn/types.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace surfdyn {

std::string format_double(double v)
{
    if (v == 0.0)
        return "0"; // normalize -0
    char buf[64];
    // shortest representation that round-trips
    for (int prec = 1; prec <= 17; prec++) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0;
        std::sscanf(buf, "%lg", &back);
        if (back == v)
            return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string csv_quote(const std::string& field)
{
    bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size())
{
    for (size_t i = 0; i < header.size(); i++) {
        if (i)
            text_ += ',';
        text_ += csv_quote(header[i]);
    }
    text_ += '\n';
}

void CsvWriter::row(std::vector<std::string> fields)
{
    if (fields.size() != columns_)
        throw PreconditionError("CsvWriter: row width does not match the header");
    for (size_t i = 0; i < fields.size(); i++) {
        if (i)
            text_ += ',';
        text_ += csv_quote(fields[i]);
    }
    text_ += '\n';
    rows_++;
}

void CsvWriter::write(const std::string& path) const { write_text_file(path, text_); }

void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw PreconditionError("write_text_file: cannot open '" + path + "'");
    out << content;
    if (!out)
        throw PreconditionError("write_text_file: write failed for '" + path + "'");
}

} // namespace surfdyn
