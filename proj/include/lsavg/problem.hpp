#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lsavg/chart.hpp"
#include "lsavg/dop853.hpp"
#include "lsavg/field.hpp"
#include "lsavg/numerics.hpp"

namespace lsavg {

inline const std::vector<std::string>& known_stages() {
    static const std::vector<std::string> s = {"avg", "reduce", "solve", "verify", "degree"};
    return s;
}

struct RunSpec {
    std::vector<double> eps;
    std::string eps_text;
    int order = 0;
    IntegratorConfig integrator;
    std::vector<std::string> stages;
    unsigned seed = 1;
    double tol = 1e-10;
    int zero_grid = 64;
    int avg_samples = 8;
};

struct NestedSpec {
    int shift = 1;
    ManifoldChart chart;
};

struct Problem {
    std::string name;
    VectorFieldSeries field;
    ManifoldChart chart;
    std::optional<NestedSpec> nested;
    RunSpec run;
    std::map<std::string, double> params;
    std::vector<std::string> original_states;  // before coordinate_order
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, Entry>;

/// Evaluate a constant expression; names in `consts` are usable.
inline double constant(const std::string& text, const std::map<std::string, double>& consts, int line, const std::string& what) {
    Declarations d;
    d.time = "__t";
    for (const auto& [k, v] : consts) d.params.push_back(k);
    try {
        Expression e = parse(text, d);
        return eval(e, 0.0, Vec(), bind_params(d, consts));
    } catch (const Error& ex) {
        throw ValidationError(what + ": " + ex.what(), line);
    }
}

}  // namespace detail

/// "0.001, 0.01" or "logrange(lo, hi, per_decade)".
inline std::vector<double> parse_eps(const std::string& text) {
    std::string s = detail::trim(text);
    std::vector<double> out;
    if (s.rfind("logrange", 0) == 0) {
        auto l = s.find('('), r = s.rfind(')');
        if (l == std::string::npos || r == std::string::npos || r < l) throw ValidationError("eps: malformed logrange");
        auto parts = detail::split_list(s.substr(l + 1, r - l - 1));
        if (parts.size() != 3) throw ValidationError("eps: logrange needs lo, hi, points per decade");
        double lo = detail::constant(parts[0], {}, 0, "eps"), hi = detail::constant(parts[1], {}, 0, "eps");
        double pd = detail::constant(parts[2], {}, 0, "eps");
        if (pd != std::floor(pd)) throw ValidationError("eps: points per decade must be an integer");
        out = log_grid(lo, hi, static_cast<int>(pd));
    } else {
        for (const auto& p : detail::split_list(s)) out.push_back(detail::constant(p, {}, 0, "eps"));
    }
    if (out.empty()) throw ValidationError("eps: empty grid");
    for (double e : out)
        if (!std::isfinite(e)) throw ValidationError("eps: non-finite value");
    return out;
}

inline Problem parse_problem(const std::string& text, const std::string& name = "problem") {
    using detail::Entry;
    using detail::Section;
    std::map<std::string, Section> sections;
    std::map<std::string, int> section_line;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const int start = lineno;
        std::string line = raw;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        while (!line.empty() && line.back() == '\\') {
            line.pop_back();
            std::string next;
            if (!std::getline(in, next)) throw ValidationError("continuation at end of file", start);
            ++lineno;
            auto h = next.find('#');
            if (h != std::string::npos) next = next.substr(0, h);
            line += " " + detail::trim(next);
            line = detail::trim(line);
        }
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError("malformed section header", start);
            current = detail::trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> allowed = {"system", "params", "fields", "manifold", "nested", "run"};
            if (std::find(allowed.begin(), allowed.end(), current) == allowed.end())
                throw ValidationError("unknown section [" + current + "]", start);
            if (sections.count(current)) throw ValidationError("duplicate section [" + current + "]", start);
            sections[current];
            section_line[current] = start;
            continue;
        }
        if (current.empty()) throw ValidationError("key outside of any section", start);
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError("expected key = value", start);
        std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ValidationError("empty key", start);
        if (sections[current].count(key)) throw ValidationError("[" + current + "] duplicate key '" + key + "'", start);
        sections[current][key] = Entry{value, start, false};
    }
    for (const char* req : {"system", "fields", "manifold"})
        if (!sections.count(req)) throw ValidationError(std::string("missing section [") + req + "]");

    auto get = [&](const std::string& sec, const std::string& key, bool required) -> Entry* {
        auto s = sections.find(sec);
        if (s == sections.end()) return nullptr;
        auto it = s->second.find(key);
        if (it == s->second.end()) {
            if (required) throw ValidationError("[" + sec + "] missing '" + key + "'", section_line[sec]);
            return nullptr;
        }
        it->second.used = true;
        return &it->second;
    };

    Problem P;
    P.name = name;

    // params: evaluated in file order (keys sorted by line)
    std::map<std::string, double> params;
    std::vector<std::string> param_order;
    if (sections.count("params")) {
        std::vector<std::pair<int, std::string>> byline;
        for (auto& [k, e] : sections["params"]) byline.push_back({e.line, k});
        std::sort(byline.begin(), byline.end());
        for (auto& [ln, k] : byline) {
            Entry& e = sections["params"][k];
            e.used = true;
            if (!is_identifier(k) || is_reserved(k)) throw ValidationError("[params] invalid name '" + k + "'", ln);
            params[k] = detail::constant(e.value, params, ln, "[params] " + k);
            param_order.push_back(k);
        }
    }
    if (sections.count("run")) {
        for (auto& [k, e] : sections["run"]) {
            if (k.rfind("params.", 0) != 0) continue;
            e.used = true;
            std::string pn = k.substr(7);
            if (!params.count(pn)) throw ValidationError("[run] override of undeclared parameter '" + pn + "'", e.line);
            params[pn] = detail::constant(e.value, params, e.line, "[run] " + k);
        }
    }
    P.params = params;

    // system
    Entry* st = get("system", "states", true);
    std::vector<std::string> states = detail::split_list(st->value);
    if (states.empty()) throw ValidationError("[system] states: at least one state variable required", st->line);
    P.original_states = states;
    std::string time = "t";
    if (Entry* e = get("system", "time", false)) time = e->value;
    Entry* per = get("system", "period", true);
    const double T = detail::constant(per->value, params, per->line, "[system] period");
    if (!(T > 0)) throw ValidationError("[system] period must be positive", per->line);
    Entry* ord = get("system", "order", true);
    const double kd = detail::constant(ord->value, {}, ord->line, "[system] order");
    if (kd != std::floor(kd) || kd < 1 || kd > 5) throw ValidationError("[system] order must be an integer in 1..5", ord->line);
    const int k = static_cast<int>(kd);
    if (Entry* e = get("system", "dim", false)) {
        double nd = detail::constant(e->value, {}, e->line, "[system] dim");
        if (nd != static_cast<double>(states.size())) throw ValidationError("[system] dim does not match the number of states", e->line);
    }
    std::vector<std::string> coords = states;
    if (Entry* e = get("system", "coordinate_order", false)) {
        coords = detail::split_list(e->value);
        std::vector<std::string> a = coords, b = states;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) throw ValidationError("[system] coordinate_order must be a permutation of the states", e->line);
    }
    Declarations decl;
    decl.states = coords;
    decl.time = time;
    decl.params = param_order;
    try {
        lsavg::validate(decl);
    } catch (const Error& ex) {
        throw ValidationError(std::string("[system] ") + ex.what(), st->line);
    }
    const int n = static_cast<int>(coords.size());

    // fields
    std::vector<std::vector<std::string>> ftext(k + 1, std::vector<std::string>(n));
    for (auto& [key, e] : sections["fields"]) {
        auto dot = key.find('.');
        if (key.size() < 2 || key[0] != 'F' || dot == std::string::npos)
            throw ValidationError("[fields] key '" + key + "' must look like F<i>.<state>", e.line);
        const std::string idx = key.substr(1, dot - 1), comp = key.substr(dot + 1);
        if (idx.empty() || !std::all_of(idx.begin(), idx.end(), ::isdigit))
            throw ValidationError("[fields] key '" + key + "' has a bad order index", e.line);
        const int i = std::stoi(idx);
        if (i > k) throw ValidationError("[fields] " + key + " exceeds the declared order", e.line);
        const int c = decl.state_index(comp);
        if (c < 0) throw ValidationError("[fields] " + key + " names an unknown state", e.line);
        ftext[i][c] = e.value;
        e.used = true;
    }
    VectorFieldSeries F;
    F.decl = std::make_shared<const Declarations>(decl);
    F.period = T;
    F.params = bind_params(decl, params);
    for (int i = 0; i <= k; ++i) {
        std::vector<Expression> row;
        for (int c = 0; c < n; ++c) {
            const std::string key = "F" + std::to_string(i) + "." + coords[c];
            if (ftext[i][c].empty()) throw ValidationError("[fields] missing " + key, section_line["fields"]);
            try {
                row.push_back(parse(ftext[i][c], F.decl));
            } catch (const Error& ex) {
                throw ValidationError("[fields] " + key + ": " + ex.what(), sections["fields"][key].line);
            }
        }
        F.F.push_back(std::move(row));
    }
    F.validate();
    P.field = std::move(F);

    // charts
    auto read_chart = [&](const std::string& sec) {
        Entry* al = get(sec, "alpha", true);
        std::vector<std::string> alpha = detail::split_list(al->value);
        const int m = static_cast<int>(alpha.size());
        if (m > n) throw ValidationError("[" + sec + "] alpha: more chart variables than states", al->line);
        if (Entry* e = get(sec, "m", false))
            if (detail::constant(e->value, {}, e->line, "[" + sec + "] m") != m)
                throw ValidationError("[" + sec + "] m does not match the alpha list", e->line);
        Declarations cd;
        cd.states = alpha;
        cd.time = time;
        cd.params = param_order;
        try {
            lsavg::validate(cd);
        } catch (const Error& ex) {
            throw ValidationError("[" + sec + "] alpha: " + ex.what(), al->line);
        }
        std::vector<std::string> beta;
        for (int c = m; c < n; ++c) {
            Entry* b = get(sec, "beta." + coords[c], true);
            beta.push_back(b->value);
        }
        Vec lo(m), hi(m);
        for (int j = 0; j < m; ++j) {
            Entry* b = get(sec, "box." + alpha[j], true);
            auto parts = detail::split_list(b->value);
            if (parts.size() != 2) throw ValidationError("[" + sec + "] box." + alpha[j] + " needs 'lo, hi'", b->line);
            lo[j] = detail::constant(parts[0], params, b->line, "[" + sec + "] box." + alpha[j]);
            hi[j] = detail::constant(parts[1], params, b->line, "[" + sec + "] box." + alpha[j]);
            if (!(lo[j] < hi[j])) throw ValidationError("[" + sec + "] box." + alpha[j] + " needs lo < hi", b->line);
        }
        for (auto& [key, e] : sections[sec]) {
            if (key.rfind("beta.", 0) == 0 && !e.used)
                throw ValidationError("[" + sec + "] " + key + ": beta is given for the normal coordinates " +
                                          (m < n ? coords[m] + ".." + coords[n - 1] : std::string("(none)")) + " only",
                                      e.line);
            if (key.rfind("box.", 0) == 0 && !e.used) throw ValidationError("[" + sec + "] " + key + " names no alpha variable", e.line);
        }
        try {
            return ManifoldChart::from_strings(n, cd, beta, bind_params(cd, params), lo, hi);
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& ex) {
            throw ValidationError("[" + sec + "] beta: " + ex.what(), al->line);
        }
    };
    P.chart = read_chart("manifold");
    if (sections.count("nested")) {
        NestedSpec ns;
        Entry* sh = get("nested", "shift", true);
        double s = detail::constant(sh->value, {}, sh->line, "[nested] shift");
        if (s != std::floor(s) || s < 1 || s >= k) throw ValidationError("[nested] shift must be an integer in 1..order-1", sh->line);
        ns.shift = static_cast<int>(s);
        ns.chart = read_chart("nested");
        P.nested = std::move(ns);
    }

    // run
    RunSpec& R = P.run;
    R.order = k;
    R.stages = known_stages();
    R.eps_text = "logrange(1e-3, 1e-1, 8)";
    if (sections.count("run")) {
        if (Entry* e = get("run", "eps", false)) R.eps_text = e->value;
        if (Entry* e = get("run", "order", false)) {
            double o = detail::constant(e->value, {}, e->line, "[run] order");
            if (o != std::floor(o) || o < 1 || o > k) throw ValidationError("[run] order must be an integer in 1..system order", e->line);
            R.order = static_cast<int>(o);
        }
        if (Entry* e = get("run", "abs_tol", false)) R.integrator.abs_tol = detail::constant(e->value, {}, e->line, "[run] abs_tol");
        if (Entry* e = get("run", "rel_tol", false)) R.integrator.rel_tol = detail::constant(e->value, {}, e->line, "[run] rel_tol");
        if (Entry* e = get("run", "max_steps", false))
            R.integrator.max_steps = static_cast<long>(detail::constant(e->value, {}, e->line, "[run] max_steps"));
        if (Entry* e = get("run", "tol", false)) R.tol = detail::constant(e->value, {}, e->line, "[run] tol");
        if (Entry* e = get("run", "seed", false)) R.seed = static_cast<unsigned>(detail::constant(e->value, {}, e->line, "[run] seed"));
        if (Entry* e = get("run", "zero_grid", false)) R.zero_grid = static_cast<int>(detail::constant(e->value, {}, e->line, "[run] zero_grid"));
        if (Entry* e = get("run", "avg_samples", false))
            R.avg_samples = static_cast<int>(detail::constant(e->value, {}, e->line, "[run] avg_samples"));
        if (Entry* e = get("run", "stages", false)) {
            R.stages = detail::split_list(e->value);
            for (const auto& s : R.stages)
                if (std::find(known_stages().begin(), known_stages().end(), s) == known_stages().end())
                    throw ValidationError("[run] stages: unknown stage '" + s + "'", e->line);
        }
        try {
            R.integrator.validate();
        } catch (const Error& ex) {
            throw ValidationError(std::string("[run] ") + ex.what(), section_line["run"]);
        }
        if (R.zero_grid < 2) throw ValidationError("[run] zero_grid must be at least 2", section_line["run"]);
    }
    try {
        R.eps = parse_eps(R.eps_text);
    } catch (const ValidationError& ex) {
        throw ValidationError(std::string("[run] ") + ex.what(), section_line.count("run") ? section_line["run"] : 0);
    }

    for (auto& [sec, entries] : sections)
        for (auto& [key, e] : entries)
            if (!e.used) throw ValidationError("[" + sec + "] unknown key '" + key + "'", e.line);
    return P;
}

inline Problem load_problem(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open problem file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    std::string name = path;
    auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    auto dot = name.rfind('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return parse_problem(ss.str(), name);
}

}  // namespace lsavg
