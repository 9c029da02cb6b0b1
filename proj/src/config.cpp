#include "blowup/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace blowup {

using nlohmann::json;

namespace {

Vec as_vec(const json& j, const char* what) {
    if (j.is_number()) return {j.get<double>()};
    if (!j.is_array()) throw ConfigError(std::string(what) + ": expected number or array");
    Vec v;
    for (const auto& e : j) v.push_back(e.get<double>());
    return v;
}

Mat as_mat(const json& j, const char* what) {
    if (j.is_number()) {
        Mat m(1, 1);
        m(0, 0) = j.get<double>();
        return m;
    }
    if (!j.is_array() || j.empty())
        throw ConfigError(std::string(what) + ": expected matrix (array of rows)");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols)
            throw ConfigError(std::string(what) + ": ragged matrix");
        for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

std::function<double(double)> coeff_from_json(const json& j) {
    if (j.contains("const")) {
        const double v = j.at("const").get<double>();
        return [v](double) { return v; };
    }
    if (j.contains("table")) {
        std::vector<std::pair<double, double>> tab;
        for (const auto& row : j.at("table"))
            tab.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        if (tab.empty()) throw ConfigError("g.table: empty");
        for (size_t i = 1; i < tab.size(); ++i)
            if (!(tab[i].first > tab[i - 1].first))
                throw ConfigError("g.table: times must be strictly increasing");
        return [tab](double t) {
            if (t <= tab.front().first) return tab.front().second;
            if (t >= tab.back().first) return tab.back().second;
            auto it = std::upper_bound(tab.begin(), tab.end(), t,
                                       [](double x, const auto& p) { return x < p.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (t - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second);
        };
    }
    throw ConfigError("g: expected {const: v} or {table: [[t,v],...]}");
}

}  // namespace

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

ControlSystem system_from_json(const json& j) {
    try {
        const std::string kind_s = j.at("kind").get<std::string>();
        GrowthKind kind;
        if (kind_s == "power")
            kind = GrowthKind::Power;
        else if (kind_s == "logpower")
            kind = GrowthKind::LogPower;
        else if (kind_s == "exponential")
            kind = GrowthKind::Exponential;
        else
            throw ConfigError("kind must be power|logpower|exponential, got " + kind_s);

        const double p = j.at("p").get<double>();
        const double beta = j.at("beta").get<double>();
        auto g = coeff_from_json(j.at("g"));
        const int n = j.at("n").get<int>();
        if (n <= 0) throw ConfigError("n must be positive");

        Vec y0 = as_vec(j.at("y0"), "y0");
        if (static_cast<int>(y0.size()) != n)
            throw ConfigError("y0 length does not match n");

        MatrixDrift drift = zero_drift(n);
        if (j.contains("A")) {
            const json& ja = j.at("A");
            if (ja.contains("const")) {
                Mat A = as_mat(ja.at("const"), "A.const");
                if (A.rows != n || A.cols != n) throw ConfigError("A.const must be n x n");
                drift = constant_drift(A);
            } else if (ja.contains("rotation")) {
                if (n != 2) throw ConfigError("A.rotation requires n = 2");
                drift = rotation_drift(ja.at("rotation").get<double>());
            } else {
                throw ConfigError("A: expected {const: matrix} or {rotation: omega}");
            }
        }

        ControlGeometry geo = no_control(n);
        if (j.contains("controls")) {
            const json& jc = j.at("controls");
            if (jc.contains("ball")) {
                Mat B = as_mat(jc.at("ball").at("B"), "controls.ball.B");
                if (B.rows != n) throw ConfigError("controls.ball.B must have n rows");
                geo = linear_ball(B, jc.at("ball").at("radius").get<double>());
            } else if (jc.contains("finite")) {
                std::vector<Vec> vals;
                for (const auto& e : jc.at("finite")) vals.push_back(as_vec(e, "controls.finite"));
                for (const Vec& v : vals)
                    if (static_cast<int>(v.size()) != n)
                        throw ConfigError("controls.finite values must lie in R^n");
                geo = finite_set(std::move(vals));
            } else {
                throw ConfigError("controls: expected {ball: ...} or {finite: [...]}");
            }
        }

        ControlSystem sys =
            make_catalog_system(kind, p, beta, g, n, drift.A, std::move(geo), std::move(y0));
        sys.drift = drift;  // keep the exact norm bound for const/rotation drifts

        if (j.contains("zeta")) {
            const json& jz = j.at("zeta");
            const double R0 = jz.at("R0").get<double>();
            const double c = jz.at("coeff").get<double>();
            const double q = jz.at("power").get<double>();
            if (!(R0 > 0.0)) throw ConfigError("zeta.R0 must be positive");
            BlowupLowerBound z;
            z.R0 = R0;
            z.zeta = [c, q](double r) { return c * std::pow(r, q); };
            sys.zeta = z;
        }
        return sys;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ControlSystem load_system(const std::string& path) { return system_from_json(parse_file(path)); }

ControlLaw law_from_json(const json& j, const ControlSystem& sys) {
    const int m = sys.controls.dim_u;
    if (!j.contains("law")) return ControlLaw::constant(Vec(static_cast<size_t>(m), 0.0));
    try {
        const json& jl = j.at("law");
        if (jl.contains("const")) {
            Vec u = as_vec(jl.at("const"), "law.const");
            if (static_cast<int>(u.size()) != m)
                throw ConfigError("law.const dimension does not match the control space");
            return ControlLaw::constant(std::move(u));
        }
        if (jl.contains("piecewise")) {
            const json& jp = jl.at("piecewise");
            std::vector<double> bp;
            for (const auto& e : jp.at("breakpoints")) bp.push_back(e.get<double>());
            std::vector<Vec> vals;
            for (const auto& e : jp.at("values")) vals.push_back(as_vec(e, "law values"));
            for (const Vec& v : vals)
                if (static_cast<int>(v.size()) != m)
                    throw ConfigError("law value dimension does not match the control space");
            return ControlLaw::piecewise(std::move(bp), std::move(vals));
        }
        throw ConfigError("law: expected {const: u} or {piecewise: {...}}");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config law: ") + e.what());
    }
}

std::vector<Vec> default_control_values(const ControlSystem& sys) {
    const ControlGeometry& geo = sys.controls;
    if (geo.kind == ControlKind::FiniteSet) return geo.values;
    if (geo.kind == ControlKind::LinearBall) {
        const int m = geo.dim_u;
        std::vector<Vec> vals;
        vals.push_back(Vec(static_cast<size_t>(m), 0.0));
        for (int i = 0; i < m; ++i) {
            Vec plus(static_cast<size_t>(m), 0.0), minus(static_cast<size_t>(m), 0.0);
            plus[static_cast<size_t>(i)] = geo.radius;
            minus[static_cast<size_t>(i)] = -geo.radius;
            vals.push_back(plus);
            vals.push_back(minus);
        }
        return vals;
    }
    throw ConfigError("no default control sample for custom convex geometries");
}

}  // namespace blowup
