#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace tlab {

// Shortest decimal representation that round-trips to the same double.
// Infinities and NaN are spelled "inf", "-inf", "nan".
std::string format_double(double x);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);

    void row(const std::vector<double>& values);
    void raw_row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
    std::size_t ncols_;
    std::string path_;
};

struct LineFit {
    double slope = 0;
    double intercept = 0;
    double rms_residual = 0;
    double slope_stderr = 0;
    int count = 0;
};

// Ordinary least squares y = slope*x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Fit of log(y) against log(x); requires x, y > 0 entrywise.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

} // namespace tlab
