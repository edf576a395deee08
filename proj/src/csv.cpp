#include "sparareal/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace sparareal {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string error_table_csv(const std::vector<ErrorTable>& tables) {
    std::ostringstream os;
    os << "model,k,n,mse,stderr,R,raw_mse\n";
    for (const auto& t : tables) {
        const std::string label = t.model.label();
        for (std::size_t k = 0; k < t.mse.size(); ++k)
            for (std::size_t n = 0; n < t.mse[k].size(); ++n)
                os << label << ',' << k << ',' << n << ',' << format_double(t.mse[k][n]) << ','
                   << format_double(t.stderr_[k][n]) << ',' << t.R << ',' << format_double(t.raw_mse[k][n]) << '\n';
    }
    return os.str();
}

std::string ehat_csv(const std::vector<ErrorTable>& tables) {
    std::ostringstream os;
    os << "model,k,ehat,stderr\n";
    for (const auto& t : tables) {
        const std::string label = t.model.label();
        for (std::size_t k = 0; k < t.ehat.size(); ++k)
            os << label << ',' << k << ',' << format_double(t.ehat[k]) << ',' << format_double(t.ehat_stderr[k]) << '\n';
    }
    return os.str();
}

std::string moments_csv(const std::vector<MomentTrace>& traces) {
    std::ostringstream os;
    os << "model,k,max_second_moment,stderr,analytic\n";
    for (const auto& tr : traces) {
        const std::string label = tr.model.label();
        for (std::size_t k = 0; k < tr.value.size(); ++k) {
            os << label << ',' << k << ',' << format_double(tr.value[k]) << ',' << format_double(tr.stderr_[k]) << ',';
            if (tr.analytic) os << format_double(*tr.analytic);
            os << '\n';
        }
    }
    return os.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << "model,eps,mean_k,stderr\n";
    for (const auto& pt : points)
        os << pt.model.label() << ',' << format_double(pt.eps) << ',' << format_double(pt.mean_k) << ','
           << format_double(pt.stderr_) << '\n';
    return os.str();
}

std::string bounds_csv(const std::vector<LabelledCurve>& curves) {
    std::ostringstream os;
    os << "model,kind,k,n,value,fingerprint\n";
    for (const auto& lc : curves) {
        const std::string kind = to_string(lc.curve.kind);
        for (const auto& pt : lc.curve.points) {
            os << lc.model << ',' << kind << ',' << pt.k << ',';
            if (pt.n) os << *pt.n;
            os << ',' << (pt.value ? format_double(*pt.value) : std::string("inapplicable")) << ',' << lc.fingerprint
               << '\n';
        }
    }
    return os.str();
}

std::string constants_csv(const std::vector<ConstantRow>& rows) {
    std::ostringstream os;
    os << "model,name,value,provenance\n";
    for (const auto& r : rows)
        os << r.model << ',' << r.name << ',' << format_double(r.value) << ',' << r.provenance << '\n';
    return os.str();
}

std::string comparison_csv(const std::vector<LabelledComparison>& comparisons) {
    std::ostringstream os;
    os << "model,k,empirical,stderr,bound_kind,bound_value,dominated\n";
    for (const auto& c : comparisons)
        for (const auto& r : c.rows)
            os << c.model << ',' << r.k << ',' << format_double(r.empirical) << ',' << format_double(r.stderr_) << ','
               << to_string(r.kind) << ',' << (r.bound ? format_double(*r.bound) : std::string("inapplicable")) << ','
               << (r.dominated ? 1 : 0) << '\n';
    return os.str();
}

std::string trajectory_csv(const IterationHistory& history, const std::vector<State>& fine, const Mesh& mesh) {
    std::ostringstream os;
    os << "series,k,n,t,component,value\n";
    for (std::size_t k = 0; k < history.states.size(); ++k)
        for (std::size_t n = 0; n < history.states[k].size(); ++n) {
            const State& u = history.states[k][n];
            for (Eigen::Index i = 0; i < u.size(); ++i)
                os << "iterate," << k << ',' << n << ',' << format_double(mesh.nodes[n]) << ',' << i << ','
                   << format_double(u(i)) << '\n';
        }
    for (std::size_t n = 0; n < fine.size(); ++n)
        for (Eigen::Index i = 0; i < fine[n].size(); ++i)
            os << "fine,," << n << ',' << format_double(mesh.nodes[n]) << ',' << i << ',' << format_double(fine[n](i))
               << '\n';
    return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace sparareal
