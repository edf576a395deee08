#pragma once

#include "sparareal/bounds.hpp"
#include "sparareal/experiments.hpp"
#include "sparareal/pint_core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sparareal {

/// Shortest text that reads back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Each writer returns the whole file, header included.

/// model,k,n,mse,stderr,R,raw_mse
std::string error_table_csv(const std::vector<ErrorTable>& tables);
/// model,k,ehat,stderr
std::string ehat_csv(const std::vector<ErrorTable>& tables);
/// model,k,max_second_moment,stderr,analytic
std::string moments_csv(const std::vector<MomentTrace>& traces);
/// model,eps,mean_k,stderr
std::string sweep_csv(const std::vector<SweepPoint>& points);

struct LabelledCurve {
    std::string model;
    std::string fingerprint;
    BoundCurve curve;
};
/// model,kind,k,n,value,fingerprint. n is empty for k-only bounds, value is
/// "inapplicable" where the bound does not apply.
std::string bounds_csv(const std::vector<LabelledCurve>& curves);

struct ConstantRow {
    std::string model;
    std::string name;
    double value = 0.0;
    std::string provenance;  ///< "exact", "estimated" or "derived"
};
/// model,name,value,provenance
std::string constants_csv(const std::vector<ConstantRow>& rows);

struct LabelledComparison {
    std::string model;
    std::vector<ComparisonRow> rows;
};
/// model,k,empirical,stderr,bound_kind,bound_value,dominated
std::string comparison_csv(const std::vector<LabelledComparison>& comparisons);

/// series,k,n,t,component,value. series is "iterate" or "fine"; k is empty for "fine".
std::string trajectory_csv(const IterationHistory& history, const std::vector<State>& fine, const Mesh& mesh);

/// Splits one CSV line on commas. No quoting is used by the writers.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace sparareal
