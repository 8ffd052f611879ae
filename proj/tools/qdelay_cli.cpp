// qdelay command-line front end. Talks to the core exclusively through the
// C API in qdelay.h; owns argument parsing, CSV/JSON emission and the
// MHz/dBm/ns unit boundary.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qdelay.h"

using json = nlohmann::ordered_json;

namespace {

constexpr double k_two_pi = 6.28318530717958647692;

double mhz_to_rad(double mhz) { return k_two_pi * mhz * 1e6; }
double rad_to_mhz(double rad) { return rad / (k_two_pi * 1e6); }

// Exit contract: 0 ok, 2 config, 3 domain, 4 extraction.
struct CliError {
    int exit_code;
    std::string message;
};

[[noreturn]] void die(int code, const std::string& message) {
    throw CliError{code, message};
}

int exit_code_for(qd_status status) {
    switch (status) {
    case QD_OK:
        return 0;
    case QD_ERR_DOMAIN:
    case QD_ERR_NO_SOLUTION:
    case QD_ERR_SINGULAR:
        return 3;
    case QD_ERR_FIT_DIVERGED:
    case QD_ERR_NOT_CONVERGED:
    case QD_ERR_TOLERANCE_NOT_MET:
    case QD_ERR_INVALID_STATE:
        return 4;
    default:
        return 2;
    }
}

void check(qd_status status) {
    if (status != QD_OK)
        die(exit_code_for(status), std::string(qd_status_name(status)) + ": " +
                                       qd_last_error());
}

struct AtomHandle {
    qd_atom* ptr = nullptr;
    ~AtomHandle() { qd_atom_free(ptr); }
};

struct PulseHandle {
    qd_pulse* ptr = nullptr;
    ~PulseHandle() { qd_pulse_free(ptr); }
};

struct FitHandle {
    qd_fit_result* ptr = nullptr;
    ~FitHandle() { qd_fit_result_free(ptr); }
};

// ------------------------------------------------------------------ output

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") {
            stream_ = &std::cout;
        } else {
            file_.open(path);
            if (!file_)
                die(2, "cannot open output file: " + path);
            stream_ = &file_;
        }
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_ = nullptr;
};

json atom_json(const qd_atom_params& p) {
    json j;
    j["omega_10_mhz"] = rad_to_mhz(p.omega_10);
    j["gamma_r_10_mhz"] = rad_to_mhz(p.gamma_r_10);
    j["gamma_10_mhz"] = rad_to_mhz(p.gamma_10);
    j["gamma_n_10_mhz"] = rad_to_mhz(p.gamma_n_10);
    if (!std::isnan(p.k_10))
        j["k_10"] = p.k_10;
    j["gamma_r_21_mhz"] = rad_to_mhz(p.gamma_r_21);
    j["gamma_20_mhz"] = rad_to_mhz(p.gamma_20);
    j["gamma_n_20_mhz"] = rad_to_mhz(p.gamma_n_20);
    j["gamma_21_mhz"] = rad_to_mhz(p.gamma_21);
    return j;
}

// Resolved angular rates, for --dry-run audits.
json atom_angular_json(const qd_atom_params& p) {
    json j;
    j["omega_10"] = p.omega_10;
    j["gamma_r_10"] = p.gamma_r_10;
    j["gamma_10"] = p.gamma_10;
    j["gamma_n_10"] = p.gamma_n_10;
    j["gamma_r_21"] = p.gamma_r_21;
    j["gamma_20"] = p.gamma_20;
    j["gamma_n_20"] = p.gamma_n_20;
    j["gamma_21"] = p.gamma_21;
    return j;
}

double chip_power_w(double p_dbm, double attenuation_db) {
    return std::pow(10.0, (p_dbm - attenuation_db - 30.0) / 10.0);
}

void write_atom_header(std::ostream& os, const std::string& command,
                       const std::string& device, const qd_atom_params& p) {
    os << "# qdelay " << command << "\n";
    if (!device.empty())
        os << "# device: " << device << "\n";
    const json j = atom_json(p);
    for (const auto& [key, value] : j.items())
        os << "# " << key << " = " << fmt9(value.get<double>()) << "\n";
}

json fit_report(const qd_fit_result* fit,
                const std::map<std::string, std::pair<std::string, double>>& display) {
    // display maps core names to (report name, unit scale divisor)
    json params = json::array();
    for (size_t i = 0; i < qd_fit_result_count(fit); ++i) {
        const std::string name = qd_fit_result_name(fit, i);
        std::string out_name = name;
        double scale = 1.0;
        if (auto it = display.find(name); it != display.end()) {
            out_name = it->second.first;
            scale = it->second.second;
        }
        json p;
        p["parameter"] = out_name;
        p["value"] = qd_fit_result_value(fit, i) / scale;
        p["stderr"] = qd_fit_result_stderr(fit, i) / scale;
        params.push_back(p);
    }
    json j;
    j["parameters"] = params;
    j["residual_norm"] = qd_fit_result_residual_norm(fit);
    j["iterations"] = qd_fit_result_iterations(fit);
    j["converged"] = qd_fit_result_converged(fit) != 0;
    return j;
}

// ---------------------------------------------------------------- csv input

struct CsvTable {
    std::vector<std::string> header; // lowercase names; empty if headerless
    std::vector<std::vector<double>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto begin = field.find_first_not_of(" \t\r");
        const auto end = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos
                             ? ""
                             : field.substr(begin, end - begin + 1));
    }
    return fields;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file)
        die(2, "cannot open input file: " + path);
    CsvTable table;
    std::string line;
    int line_no = 0;
    size_t width = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto fields = split_csv_line(line);
        if (table.header.empty() && table.rows.empty()) {
            // Header row iff any field fails to parse as a number.
            bool numeric = true;
            for (const auto& f : fields) {
                char* end = nullptr;
                std::strtod(f.c_str(), &end);
                if (f.empty() || end != f.c_str() + f.size()) {
                    numeric = false;
                    break;
                }
            }
            if (!numeric) {
                for (auto& f : fields) {
                    std::transform(f.begin(), f.end(), f.begin(),
                                   [](unsigned char c) { return std::tolower(c); });
                    table.header.push_back(f);
                }
                width = fields.size();
                continue;
            }
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size())
                die(2, path + ":" + std::to_string(line_no) +
                           ": not a number: '" + f + "'");
            row.push_back(v);
        }
        if (width == 0)
            width = row.size();
        if (row.size() != width)
            die(2, path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " fields, got " +
                       std::to_string(row.size()));
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty())
        die(2, path + ": no data rows");
    return table;
}

int column_of(const CsvTable& table, const std::string& name) {
    for (size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] == name)
            return int(i);
    return -1;
}

// freq_mhz,re_r,im_r or freq_mhz,abs_r,phase_rad (auto-detected by header).
void read_spectrum_csv(const std::string& path, std::vector<double>& freq_mhz,
                       std::vector<qd_complex>& values) {
    const CsvTable table = read_csv(path);
    int c_freq = 0, c_a = 1, c_b = 2;
    bool polar = false;
    if (!table.header.empty()) {
        c_freq = column_of(table, "freq_mhz");
        if (c_freq < 0)
            die(2, path + ": missing freq_mhz column");
        if (column_of(table, "re_r") >= 0) {
            c_a = column_of(table, "re_r");
            c_b = column_of(table, "im_r");
        } else if (column_of(table, "abs_r") >= 0) {
            c_a = column_of(table, "abs_r");
            c_b = column_of(table, "phase_rad");
            polar = true;
        } else {
            die(2, path + ": need re_r,im_r or abs_r,phase_rad columns");
        }
        if (c_b < 0)
            die(2, path + ": incomplete complex columns");
    }
    for (const auto& row : table.rows) {
        if (std::max({c_freq, c_a, c_b}) >= int(row.size()))
            die(2, path + ": row too short");
        freq_mhz.push_back(row[c_freq]);
        if (polar)
            values.push_back({row[c_a] * std::cos(row[c_b]),
                              row[c_a] * std::sin(row[c_b])});
        else
            values.push_back({row[c_a], row[c_b]});
    }
}

// ------------------------------------------------------------------ helpers

int thread_cap_from_env() {
    const char* env = std::getenv("QDELAY_THREADS");
    if (!env || !*env)
        return std::numeric_limits<int>::max();
    const int cap = std::atoi(env);
    return cap > 0 ? cap : 1;
}

int effective_threads(int requested) {
    return std::clamp(requested, 1, thread_cap_from_env());
}

// Deterministic strided parallel map: out[i] = fn(i).
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
    const int workers = std::max(1, std::min<int>(threads, int(n)));
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (size_t i = size_t(w); i < n; i += size_t(workers))
                fn(i);
        });
    for (auto& t : pool)
        t.join();
}

std::vector<double> linspace(double lo, double hi, int points) {
    if (points < 1)
        die(2, "grid needs at least one point");
    if (points == 1)
        return {lo};
    if (!(hi > lo))
        die(2, "grid range must be increasing");
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i)
        v[i] = lo + (hi - lo) * double(i) / double(points - 1);
    return v;
}

AtomHandle load_atom(const std::string& device) {
    AtomHandle atom;
    check(qd_atom_load_file(device.c_str(), &atom.ptr));
    return atom;
}

qd_atom_params atom_params_of(const qd_atom* atom) {
    qd_atom_params p;
    check(qd_atom_get(atom, &p));
    return p;
}

// Shared probe/control tone options: explicit Rabi in MHz wins over a line
// power in dBm converted through the coupling constant.
struct ToneArgs {
    double omega_mhz = 0.0;
    double pc_dbm = std::nan("");
    double attenuation_db = 0.0;
};

double control_rabi(const ToneArgs& tone, const qd_atom_params& p) {
    if (!std::isnan(tone.pc_dbm)) {
        if (std::isnan(p.k_10))
            die(2, "device file has no k_10; give --omega-c-mhz instead of --pc-dbm");
        double rabi = 0.0;
        check(qd_dbm_to_rabi(tone.pc_dbm, std::sqrt(2.0) * p.k_10,
                             tone.attenuation_db, &rabi));
        return rabi;
    }
    return mhz_to_rad(tone.omega_mhz);
}

// ---------------------------------------------------------------- commands

struct SpectrumArgs {
    std::string device;
    double delta_min_mhz = -10.0;
    double delta_max_mhz = 10.0;
    int points = 2001;
    ToneArgs control;
    double delta_c_mhz = 0.0;
    bool allow_coarse = false;
    int smooth_window = 0;
    std::string out = "-";
    bool dry_run = false;
};

int cmd_spectrum(const SpectrumArgs& args) {
    AtomHandle atom = load_atom(args.device);
    const qd_atom_params p = atom_params_of(atom.ptr);
    const double omega_c = control_rabi(args.control, p);
    const double delta_c = mhz_to_rad(args.delta_c_mhz);

    if (args.dry_run) {
        json j;
        j["command"] = "spectrum";
        j["device"] = atom_json(p);
        j["device_rad_s"] = atom_angular_json(p);
        j["omega_c_mhz"] = rad_to_mhz(omega_c);
        j["omega_c_rad_s"] = omega_c;
        if (!std::isnan(args.control.pc_dbm)) {
            j["pc_dbm"] = args.control.pc_dbm;
            j["control_chip_power_w"] =
                chip_power_w(args.control.pc_dbm, args.control.attenuation_db);
        }
        j["delta_c_mhz"] = args.delta_c_mhz;
        j["grid"] = {{"delta_min_mhz", args.delta_min_mhz},
                     {"delta_max_mhz", args.delta_max_mhz},
                     {"points", args.points}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    std::vector<double> delta_mhz = linspace(args.delta_min_mhz, args.delta_max_mhz,
                                             args.points);
    std::vector<double> detunings(delta_mhz.size());
    for (size_t i = 0; i < delta_mhz.size(); ++i)
        detunings[i] = mhz_to_rad(delta_mhz[i]);

    std::vector<qd_complex> r(detunings.size());
    check(qd_spectrum(atom.ptr, detunings.data(), detunings.size(), omega_c,
                      delta_c, r.data()));
    std::vector<double> phase(detunings.size());
    check(qd_phase_unwrap(r.data(), r.size(), phase.data()));
    std::vector<double> tau(detunings.size());
    std::vector<unsigned char> mask(detunings.size());
    check(qd_group_delay_numeric(detunings.data(), r.data(), detunings.size(),
                                 args.allow_coarse ? 1 : 0, args.smooth_window,
                                 tau.data(), mask.data()));

    Output output(args.out);
    auto& os = output.stream();
    write_atom_header(os, "spectrum", args.device, p);
    os << "# omega_c_mhz = " << fmt9(rad_to_mhz(omega_c)) << "\n";
    os << "# delta_c_mhz = " << fmt9(args.delta_c_mhz) << "\n";
    os << "omega_c_mhz,delta_p_mhz,re_r,im_r,abs_r,phase_rad,tau_d_ns,singular\n";
    size_t n_singular = 0;
    for (size_t i = 0; i < detunings.size(); ++i) {
        const double abs_r = std::hypot(r[i].re, r[i].im);
        os << fmt9(rad_to_mhz(omega_c)) << ',' << fmt9(delta_mhz[i]) << ','
           << fmt9(r[i].re) << ',' << fmt9(r[i].im) << ',' << fmt9(abs_r) << ','
           << fmt9(phase[i]) << ',' << fmt9(tau[i] * 1e9) << ','
           << int(mask[i]) << "\n";
        n_singular += mask[i];
    }
    if (n_singular == detunings.size())
        die(3, "every grid point is singular");
    return 0;
}

struct DelayMapArgs {
    std::string device;
    std::string omega_table;
    double pc_min_dbm = -160.0;
    double pc_max_dbm = -110.0;
    int pc_points = 101;
    double delta_min_mhz = -15.0;
    double delta_max_mhz = 15.0;
    int points = 601;
    double delta_c_mhz = 0.0;
    double attenuation_db = 0.0;
    int threads = 1;
    bool allow_coarse = false;
    int smooth_window = 0;
    std::string out = "-";
    bool dry_run = false;
};

int cmd_delay_map(const DelayMapArgs& args) {
    AtomHandle atom = load_atom(args.device);
    const qd_atom_params base = atom_params_of(atom.ptr);
    const int threads = effective_threads(args.threads);

    std::vector<double> delta_mhz =
        linspace(args.delta_min_mhz, args.delta_max_mhz, args.points);
    std::vector<double> detunings(delta_mhz.size());
    for (size_t i = 0; i < delta_mhz.size(); ++i)
        detunings[i] = mhz_to_rad(delta_mhz[i]);

    if (args.dry_run) {
        json j;
        j["command"] = "delay-map";
        j["device"] = atom_json(base);
        j["device_rad_s"] = atom_angular_json(base);
        j["threads"] = threads;
        if (args.omega_table.empty()) {
            j["axis1"] = {{"pc_min_dbm", args.pc_min_dbm},
                          {"pc_max_dbm", args.pc_max_dbm},
                          {"points", args.pc_points},
                          {"attenuation_db", args.attenuation_db}};
        } else {
            j["axis1"] = {{"omega_table", args.omega_table}};
        }
        j["grid"] = {{"delta_min_mhz", args.delta_min_mhz},
                     {"delta_max_mhz", args.delta_max_mhz},
                     {"points", args.points}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    Output output(args.out);
    auto& os = output.stream();
    write_atom_header(os, "delay-map", args.device, base);

    const size_t cols = detunings.size();
    size_t n_singular = 0, n_cells = 0;

    auto write_rows = [&](const std::string& axis_name,
                          const std::vector<double>& axis,
                          const std::vector<qd_complex>& r,
                          const std::vector<double>& phase,
                          const std::vector<double>& tau,
                          const std::vector<unsigned char>& mask) {
        os << axis_name
           << ",delta_p_mhz,re_r,im_r,abs_r,phase_rad,tau_d_ns,singular\n";
        for (size_t row = 0; row < axis.size(); ++row) {
            for (size_t col = 0; col < cols; ++col) {
                const size_t i = row * cols + col;
                os << fmt9(axis[row]) << ',' << fmt9(delta_mhz[col]) << ','
                   << fmt9(r[i].re) << ',' << fmt9(r[i].im) << ','
                   << fmt9(std::hypot(r[i].re, r[i].im)) << ',' << fmt9(phase[i])
                   << ',' << fmt9(tau[i] * 1e9) << ',' << int(mask[i]) << "\n";
                n_singular += mask[i];
                ++n_cells;
            }
        }
    };

    if (args.omega_table.empty()) {
        if (std::isnan(base.k_10))
            die(2, "device file has no k_10; a control-power sweep needs it");
        std::vector<double> pc =
            linspace(args.pc_min_dbm, args.pc_max_dbm, args.pc_points);
        std::vector<qd_complex> r(pc.size() * cols);
        std::vector<double> tau(pc.size() * cols);
        std::vector<unsigned char> mask(pc.size() * cols);
        check(qd_sweep_control_power(atom.ptr, pc.data(), pc.size(),
                                     args.attenuation_db, mhz_to_rad(args.delta_c_mhz),
                                     detunings.data(), cols, threads, r.data(),
                                     tau.data(), mask.data()));
        std::vector<double> phase(pc.size() * cols);
        for (size_t row = 0; row < pc.size(); ++row)
            check(qd_phase_unwrap(r.data() + row * cols, cols,
                                  phase.data() + row * cols));
        write_rows("pc_dbm", pc, r, phase, tau, mask);
    } else {
        // User-supplied (omega_10, Gamma_10, gamma_10) rows; control off.
        const CsvTable table = read_csv(args.omega_table);
        int c_w = 0, c_g = 1, c_gam = 2;
        if (!table.header.empty()) {
            c_w = column_of(table, "omega_10_mhz");
            c_g = column_of(table, "gamma_r_10_mhz");
            c_gam = column_of(table, "gamma_10_mhz");
            if (c_w < 0 || c_g < 0 || c_gam < 0)
                die(2, args.omega_table +
                           ": need omega_10_mhz,gamma_r_10_mhz,gamma_10_mhz columns");
        }
        const size_t rows = table.rows.size();
        std::vector<double> axis(rows);
        std::vector<qd_complex> r(rows * cols);
        std::vector<double> phase(rows * cols), tau(rows * cols);
        std::vector<unsigned char> mask(rows * cols);
        std::vector<int> row_status(rows, 0);
        parallel_for(rows, threads, [&](size_t row) {
            const auto& fields = table.rows[row];
            if (std::max({c_w, c_g, c_gam}) >= int(fields.size())) {
                row_status[row] = 2;
                return;
            }
            qd_atom_params p{};
            p.omega_10 = mhz_to_rad(fields[c_w]);
            p.gamma_r_10 = mhz_to_rad(fields[c_g]);
            p.gamma_10 = mhz_to_rad(fields[c_gam]);
            p.gamma_n_10 = std::nan("");
            p.k_10 = std::nan("");
            p.gamma_r_21 = std::nan("");
            p.gamma_20 = std::nan("");
            p.gamma_n_20 = std::nan("");
            p.gamma_21 = std::nan("");
            qd_atom* row_atom = nullptr;
            if (qd_atom_create(&p, &row_atom) != QD_OK) {
                row_status[row] = 2;
                return;
            }
            axis[row] = fields[c_w];
            qd_status st = qd_spectrum(row_atom, detunings.data(), cols, 0.0, 0.0,
                                       r.data() + row * cols);
            if (st == QD_OK)
                st = qd_phase_unwrap(r.data() + row * cols, cols,
                                     phase.data() + row * cols);
            if (st == QD_OK)
                st = qd_group_delay_numeric(detunings.data(), r.data() + row * cols,
                                            cols, args.allow_coarse ? 1 : 0,
                                            args.smooth_window,
                                            tau.data() + row * cols,
                                            mask.data() + row * cols);
            if (st != QD_OK)
                row_status[row] = exit_code_for(st);
            qd_atom_free(row_atom);
        });
        for (size_t row = 0; row < rows; ++row)
            if (row_status[row] != 0)
                die(row_status[row], args.omega_table + ": row " +
                                         std::to_string(row + 1) + " failed");
        write_rows("omega_10_mhz", axis, r, phase, tau, mask);
    }
    if (n_cells > 0 && n_singular == n_cells)
        die(3, "every grid cell is singular");
    return 0;
}

struct PulseArgs {
    std::string device;
    double sigma_ns = 1000.0;
    double t0_ns = std::nan("");
    double dt_ns = 1.0;
    double span_ns = std::nan("");
    double omega_p_mhz = 0.166;
    double pp_dbm = std::nan("");
    ToneArgs control;
    double delta_p_mhz = 0.0;
    double delta_c_mhz = 0.0;
    double tol = 1e-9;
    bool reduced = false;
    bool oracle = false;
    std::string out;
    bool dry_run = false;
};

struct PulseRun {
    double tau_d_ns;
    double residual_ratio;
    bool low_confidence;
};

PulseRun run_pulse_once(const qd_atom* atom, const qd_atom_params& p,
                        const PulseArgs& args, std::ostream* trace_os) {
    const double sigma = args.sigma_ns * 1e-9;
    const double t0 = (std::isnan(args.t0_ns) ? 5.0 * args.sigma_ns : args.t0_ns) * 1e-9;
    const double span = (std::isnan(args.span_ns) ? 10.0 * args.sigma_ns : args.span_ns) * 1e-9;
    const double dt = args.dt_ns * 1e-9;

    double omega_p = mhz_to_rad(args.omega_p_mhz);
    if (!std::isnan(args.pp_dbm)) {
        if (std::isnan(p.k_10))
            die(2, "device file has no k_10; give --omega-p-mhz instead of --pp-dbm");
        check(qd_dbm_to_rabi(args.pp_dbm, p.k_10, args.control.attenuation_db,
                             &omega_p));
    }
    const double omega_c = control_rabi(args.control, p);
    const double delta_p = mhz_to_rad(args.delta_p_mhz);
    const double delta_c = mhz_to_rad(args.delta_c_mhz);

    PulseHandle probe;
    check(qd_pulse_gaussian(omega_p, sigma, t0, span, dt, 0, &probe.ptr));
    PulseHandle out;
    if (args.oracle)
        check(qd_narrowband_output(atom, probe.ptr, omega_c, delta_p, &out.ptr));
    else
        check(qd_bloch_output(atom, probe.ptr, delta_p, omega_c, delta_c, args.tol,
                              args.reduced ? 1 : 0, &out.ptr));

    if (trace_os) {
        const size_t n = qd_pulse_size(probe.ptr);
        std::vector<qd_complex> in_s(n), out_s(n);
        check(qd_pulse_samples(probe.ptr, in_s.data(), n));
        check(qd_pulse_samples(out.ptr, out_s.data(), n));
        *trace_os << "t_ns,re_in,im_in,re_out,im_out,abs_in,abs_out\n";
        for (size_t i = 0; i < n; ++i) {
            const double t_ns = (qd_pulse_t0(probe.ptr) + double(i) * dt) * 1e9;
            *trace_os << fmt9(t_ns) << ',' << fmt9(in_s[i].re) << ','
                      << fmt9(in_s[i].im) << ',' << fmt9(out_s[i].re) << ','
                      << fmt9(out_s[i].im) << ','
                      << fmt9(std::hypot(in_s[i].re, in_s[i].im)) << ','
                      << fmt9(std::hypot(out_s[i].re, out_s[i].im)) << "\n";
        }
    }

    // Reference without the atom: the input envelope itself.
    double tau = 0.0, ratio = 0.0;
    int low = 0;
    check(qd_extract_delay(probe.ptr, out.ptr, &tau, &ratio, &low));
    return {tau * 1e9, ratio, low != 0};
}

int cmd_pulse(const PulseArgs& args) {
    AtomHandle atom = load_atom(args.device);
    const qd_atom_params p = atom_params_of(atom.ptr);

    if (args.dry_run) {
        json j;
        j["command"] = "pulse";
        j["device"] = atom_json(p);
        j["device_rad_s"] = atom_angular_json(p);
        double omega_p = mhz_to_rad(args.omega_p_mhz);
        if (!std::isnan(args.pp_dbm) && !std::isnan(p.k_10))
            check(qd_dbm_to_rabi(args.pp_dbm, p.k_10, args.control.attenuation_db,
                                 &omega_p));
        j["omega_p_mhz"] = rad_to_mhz(omega_p);
        j["omega_p_rad_s"] = omega_p;
        if (!std::isnan(args.pp_dbm))
            j["probe_chip_power_w"] =
                chip_power_w(args.pp_dbm, args.control.attenuation_db);
        j["omega_c_mhz"] = rad_to_mhz(control_rabi(args.control, p));
        j["omega_c_rad_s"] = control_rabi(args.control, p);
        if (!std::isnan(args.control.pc_dbm))
            j["control_chip_power_w"] =
                chip_power_w(args.control.pc_dbm, args.control.attenuation_db);
        j["delta_p_mhz"] = args.delta_p_mhz;
        j["delta_c_mhz"] = args.delta_c_mhz;
        j["sigma_ns"] = args.sigma_ns;
        j["t0_ns"] = std::isnan(args.t0_ns) ? 5.0 * args.sigma_ns : args.t0_ns;
        j["span_ns"] = std::isnan(args.span_ns) ? 10.0 * args.sigma_ns : args.span_ns;
        j["dt_ns"] = args.dt_ns;
        j["tol"] = args.tol;
        j["path"] = args.oracle ? "narrowband" : (args.reduced ? "bloch-reduced" : "bloch-full");
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    std::unique_ptr<Output> output;
    std::ostream* trace_os = nullptr;
    if (!args.out.empty()) {
        output = std::make_unique<Output>(args.out);
        trace_os = &output->stream();
    }
    const PulseRun run = run_pulse_once(atom.ptr, p, args, trace_os);
    json j;
    j["tau_d_ns"] = run.tau_d_ns;
    j["residual_ratio"] = run.residual_ratio;
    j["confidence"] = run.low_confidence ? "low" : "ok";
    std::cout << j.dump(2) << "\n";
    return 0;
}

struct PulseSweepArgs {
    PulseArgs base;
    std::string sweep = "sigma-ns";
    std::vector<double> values;
    int threads = 1;
    std::string out = "-";
};

int cmd_pulse_sweep(const PulseSweepArgs& args) {
    if (args.values.empty())
        die(2, "pulse-sweep needs --values");
    const std::set<std::string> known = {"sigma-ns", "delta-p-mhz", "pc-dbm"};
    if (!known.count(args.sweep))
        die(2, "unknown sweep parameter: " + args.sweep);

    AtomHandle atom = load_atom(args.base.device);
    const qd_atom_params p = atom_params_of(atom.ptr);

    if (args.base.dry_run) {
        json j;
        j["command"] = "pulse-sweep";
        j["device"] = atom_json(p);
        j["sweep"] = args.sweep;
        j["values"] = args.values;
        j["threads"] = effective_threads(args.threads);
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    struct Row {
        double value;
        double tau_d_ns = std::nan("");
        double ratio = std::nan("");
        std::string confidence = "failed";
        int status = 0;
    };
    std::vector<Row> rows(args.values.size());
    parallel_for(rows.size(), effective_threads(args.threads), [&](size_t i) {
        PulseArgs one = args.base;
        rows[i].value = args.values[i];
        if (args.sweep == "sigma-ns")
            one.sigma_ns = args.values[i];
        else if (args.sweep == "delta-p-mhz")
            one.delta_p_mhz = args.values[i];
        else
            one.control.pc_dbm = args.values[i];
        try {
            const PulseRun run = run_pulse_once(atom.ptr, p, one, nullptr);
            rows[i].tau_d_ns = run.tau_d_ns;
            rows[i].ratio = run.residual_ratio;
            rows[i].confidence = run.low_confidence ? "low" : "ok";
        } catch (const CliError& e) {
            rows[i].status = e.exit_code;
        }
    });

    Output output(args.out);
    auto& os = output.stream();
    write_atom_header(os, "pulse-sweep " + args.sweep, args.base.device, p);
    os << "param,tau_d_ns,confidence,residual_ratio\n";
    size_t failures = 0;
    for (const auto& row : rows) {
        os << fmt9(row.value) << ',' << fmt9(row.tau_d_ns) << ','
           << row.confidence << ',' << fmt9(row.ratio) << "\n";
        failures += row.status != 0;
    }
    if (failures == rows.size())
        die(4, "delay extraction failed for every sweep value");
    return 0;
}

struct FitArgs {
    std::string input;
    std::string device;
    std::string out = "-";
    double f0_mhz = std::nan("");
    double attenuation_db = std::nan("");
    double k_10 = std::nan("");
    bool dry_run = false;
};

int cmd_fit_circle(const FitArgs& args) {
    const CsvTable table = read_csv(args.input);
    int c_re = 0, c_im = 1;
    if (!table.header.empty()) {
        c_re = column_of(table, "re_r");
        c_im = column_of(table, "im_r");
        if (c_re < 0 || c_im < 0)
            die(2, args.input + ": need re_r,im_r columns");
    }
    std::vector<qd_complex> points;
    points.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        if (std::max(c_re, c_im) >= int(row.size()))
            die(2, args.input + ": row too short");
        points.push_back({row[c_re], row[c_im]});
    }
    if (args.dry_run) {
        json j;
        j["command"] = "fit-circle";
        j["n_points"] = points.size();
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    qd_complex center;
    double radius = 0.0;
    FitHandle fit;
    check(qd_circle_fit(points.data(), points.size(), &center, &radius, &fit.ptr));
    json j = fit_report(fit.ptr, {});
    j["diameter"] = 2.0 * radius;
    Output output(args.out);
    output.stream() << j.dump(2) << "\n";
    return 0;
}

int cmd_fit_spectrum(const FitArgs& args) {
    std::vector<double> freq_mhz;
    std::vector<qd_complex> values;
    read_spectrum_csv(args.input, freq_mhz, values);

    double f0 = args.f0_mhz;
    if (std::isnan(f0)) {
        // Default center: the sample farthest from r = 1.
        double best = -1.0;
        for (size_t i = 0; i < values.size(); ++i) {
            const double d = std::hypot(values[i].re - 1.0, values[i].im);
            if (d > best) {
                best = d;
                f0 = freq_mhz[i];
            }
        }
    }
    if (args.dry_run) {
        json j;
        j["command"] = "fit-spectrum";
        j["n_points"] = values.size();
        j["f0_mhz"] = f0;
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::vector<double> detunings(freq_mhz.size());
    for (size_t i = 0; i < freq_mhz.size(); ++i)
        detunings[i] = mhz_to_rad(freq_mhz[i] - f0);

    FitHandle fit;
    check(qd_fit_weak_spectrum(detunings.data(), values.data(), values.size(),
                               mhz_to_rad(f0), &fit.ptr));
    const double scale = k_two_pi * 1e6;
    json j = fit_report(fit.ptr, {{"omega_10", {"omega_10_mhz", scale}},
                                  {"gamma_r_10", {"gamma_r_10_mhz", scale}},
                                  {"gamma_10", {"gamma_10_mhz", scale}}});
    Output output(args.out);
    output.stream() << j.dump(2) << "\n";
    return 0;
}

int cmd_fit_power(const FitArgs& args) {
    if (args.device.empty())
        die(2, "fit-power needs --device for Gamma_10 and gamma_10");
    if (std::isnan(args.attenuation_db) == std::isnan(args.k_10))
        die(2, "pin exactly one of --atten-db / --k10 (they are jointly "
               "identifiable only as a product)");
    AtomHandle atom = load_atom(args.device);
    const CsvTable table = read_csv(args.input);
    int c_p = 0, c_re = 1, c_im = 2;
    if (!table.header.empty()) {
        c_p = column_of(table, "p_dbm");
        c_re = column_of(table, "re_r");
        c_im = column_of(table, "im_r");
        if (c_p < 0 || c_re < 0 || c_im < 0)
            die(2, args.input + ": need p_dbm,re_r,im_r columns");
    }
    std::vector<double> powers;
    std::vector<qd_complex> values;
    for (const auto& row : table.rows) {
        if (std::max({c_p, c_re, c_im}) >= int(row.size()))
            die(2, args.input + ": row too short");
        powers.push_back(row[c_p]);
        values.push_back({row[c_re], row[c_im]});
    }
    if (args.dry_run) {
        json j;
        j["command"] = "fit-power";
        j["n_points"] = powers.size();
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    FitHandle fit;
    check(qd_fit_power(powers.data(), values.data(), powers.size(), atom.ptr,
                       args.attenuation_db, args.k_10, &fit.ptr));
    json j = fit_report(fit.ptr, {});

    // Predicted |r| = 0 probe power from the fitted calibration.
    double omega_sing = 0.0;
    if (qd_singular_probe_rabi(atom.ptr, &omega_sing) == QD_OK) {
        const bool fitted_k = qd_fit_result_count(fit.ptr) == 1 &&
                              std::string(qd_fit_result_name(fit.ptr, 0)) == "k_10";
        const double k = fitted_k ? qd_fit_result_value(fit.ptr, 0) : args.k_10;
        const double att =
            fitted_k ? args.attenuation_db : qd_fit_result_value(fit.ptr, 0);
        double dbm = 0.0;
        if (qd_rabi_to_dbm(omega_sing, k, att, &dbm) == QD_OK)
            j["predicted_singular_pp_dbm"] = dbm;
    }
    Output output(args.out);
    output.stream() << j.dump(2) << "\n";
    return 0;
}

int cmd_fit_two_tone(const FitArgs& args) {
    if (args.device.empty())
        die(2, "fit-two-tone needs --device for Gamma_10, gamma_10 and k_10");
    AtomHandle atom = load_atom(args.device);
    const CsvTable table = read_csv(args.input);
    int c_pc = 0, c_d = 1, c_re = 2, c_im = 3;
    if (!table.header.empty()) {
        c_pc = column_of(table, "pc_dbm");
        c_d = column_of(table, "delta_p_mhz");
        c_re = column_of(table, "re_r");
        c_im = column_of(table, "im_r");
        if (c_pc < 0 || c_d < 0 || c_re < 0 || c_im < 0)
            die(2, args.input + ": need pc_dbm,delta_p_mhz,re_r,im_r columns");
    }

    // Rebuild the rectangular grid from the flat rows.
    std::vector<double> pc, delta_mhz;
    std::map<std::pair<double, double>, qd_complex> cells;
    for (const auto& row : table.rows) {
        if (std::max({c_pc, c_d, c_re, c_im}) >= int(row.size()))
            die(2, args.input + ": row too short");
        const double p = row[c_pc], d = row[c_d];
        if (std::find(pc.begin(), pc.end(), p) == pc.end())
            pc.push_back(p);
        if (std::find(delta_mhz.begin(), delta_mhz.end(), d) == delta_mhz.end())
            delta_mhz.push_back(d);
        cells[{p, d}] = {row[c_re], row[c_im]};
    }
    std::sort(pc.begin(), pc.end());
    std::sort(delta_mhz.begin(), delta_mhz.end());
    if (cells.size() != pc.size() * delta_mhz.size())
        die(2, args.input + ": rows do not form a full pc x delta grid");

    std::vector<double> detunings(delta_mhz.size());
    for (size_t i = 0; i < delta_mhz.size(); ++i)
        detunings[i] = mhz_to_rad(delta_mhz[i]);
    std::vector<qd_complex> values;
    values.reserve(cells.size());
    for (double p : pc)
        for (double d : delta_mhz)
            values.push_back(cells.at({p, d}));

    if (args.dry_run) {
        json j;
        j["command"] = "fit-two-tone";
        j["grid"] = {{"pc_points", pc.size()}, {"delta_points", delta_mhz.size()}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    const double atten = std::isnan(args.attenuation_db) ? 0.0 : args.attenuation_db;
    FitHandle fit;
    check(qd_fit_two_tone(pc.data(), pc.size(), detunings.data(), detunings.size(),
                          values.data(), atten, atom.ptr, &fit.ptr));
    const double scale = k_two_pi * 1e6;
    json j = fit_report(fit.ptr, {{"gamma_20", {"gamma_20_mhz", scale}}});

    // Predicted singularity location with the fitted gamma_20.
    qd_atom_params p = atom_params_of(atom.ptr);
    p.gamma_20 = qd_fit_result_value(fit.ptr, 0) * 1.0;
    p.gamma_n_20 = std::nan("");
    qd_atom* refit = nullptr;
    if (qd_atom_create(&p, &refit) == QD_OK) {
        double omega_sing = 0.0;
        if (qd_singular_control_rabi(refit, &omega_sing) == QD_OK) {
            j["singular_omega_c_mhz"] = rad_to_mhz(omega_sing);
            if (!std::isnan(p.k_10)) {
                double dbm = 0.0;
                if (qd_rabi_to_dbm(omega_sing, std::sqrt(2.0) * p.k_10, atten,
                                   &dbm) == QD_OK)
                    j["predicted_singular_pc_dbm"] = dbm;
            }
        }
        qd_atom_free(refit);
    }
    Output output(args.out);
    output.stream() << j.dump(2) << "\n";
    return 0;
}

struct FeaturesArgs {
    std::string device;
    ToneArgs control;
    std::string out = "-";
    bool dry_run = false;
};

int cmd_features(const FeaturesArgs& args) {
    AtomHandle atom = load_atom(args.device);
    const qd_atom_params p = atom_params_of(atom.ptr);
    if (args.dry_run) {
        json j;
        j["command"] = "features";
        j["device"] = atom_json(p);
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    const double omega_c = control_rabi(args.control, p);
    json j;
    j["device"] = atom_json(p);

    qd_complex r0;
    check(qd_reflection_weak(atom.ptr, 0.0, &r0));
    j["resonant_r"] = {{"re", r0.re}, {"im", r0.im}};

    double tau = 0.0;
    if (qd_group_delay_analytic(atom.ptr, omega_c, 0.0, &tau) == QD_OK)
        j["resonant_tau_d_ns"] = tau * 1e9;
    else
        j["resonant_tau_d_ns"] = nullptr;

    auto rabi_entry = [&](double rabi, double k_scale) {
        json e;
        e["omega_mhz"] = rad_to_mhz(rabi);
        if (!std::isnan(p.k_10)) {
            double dbm = 0.0;
            if (qd_rabi_to_dbm(rabi, k_scale * p.k_10,
                               args.control.attenuation_db, &dbm) == QD_OK)
                e["p_dbm"] = dbm;
        }
        return e;
    };

    double omega_sing = 0.0;
    if (qd_singular_control_rabi(atom.ptr, &omega_sing) == QD_OK)
        j["singular_control"] = rabi_entry(omega_sing, std::sqrt(2.0));
    else
        j["singular_control"] = nullptr;

    double omega_ats = 0.0;
    check(qd_ats_threshold_rabi(atom.ptr, &omega_ats));
    j["ats_threshold"] = rabi_entry(omega_ats, std::sqrt(2.0));

    double omega_probe = 0.0;
    if (qd_singular_probe_rabi(atom.ptr, &omega_probe) == QD_OK)
        j["singular_probe"] = rabi_entry(omega_probe, 1.0);
    else
        j["singular_probe"] = nullptr;

    double boundary[2];
    int exists = 0;
    check(qd_zero_delay_boundary(atom.ptr, omega_c, boundary, &exists));
    if (exists)
        j["zero_delay_boundary_mhz"] = {rad_to_mhz(boundary[0]),
                                        rad_to_mhz(boundary[1])};
    else
        j["zero_delay_boundary_mhz"] = nullptr;

    Output output(args.out);
    output.stream() << j.dump(2) << "\n";
    return 0;
}

void add_control_options(CLI::App* cmd, ToneArgs& tone) {
    auto* omega = cmd->add_option("--omega-c-mhz", tone.omega_mhz,
                                  "control Rabi frequency, cyclic MHz");
    cmd->add_option("--pc-dbm", tone.pc_dbm,
                    "control line power in dBm (needs k_10; k_21 = sqrt(2) k_10)")
        ->excludes(omega);
    cmd->add_option("--atten-db", tone.attenuation_db,
                    "line-to-chip attenuation in dB");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"atom-in-front-of-a-mirror reflection, group delay and pulse "
                 "toolkit"};
    app.require_subcommand(1);

    SpectrumArgs spectrum;
    auto* c_spec = app.add_subcommand("spectrum",
                                      "reflection and delay profile vs detuning");
    c_spec->add_option("--device", spectrum.device, "device parameter file")
        ->required();
    c_spec->add_option("--delta-min-mhz", spectrum.delta_min_mhz, "grid start");
    c_spec->add_option("--delta-max-mhz", spectrum.delta_max_mhz, "grid end");
    c_spec->add_option("--points", spectrum.points, "grid points");
    add_control_options(c_spec, spectrum.control);
    c_spec->add_option("--delta-c-mhz", spectrum.delta_c_mhz, "control detuning");
    c_spec->add_flag("--allow-coarse", spectrum.allow_coarse,
                     "skip the phase-aliasing grid guard");
    c_spec->add_option("--smooth-window", spectrum.smooth_window,
                       "moving-average half-width on the phase (noisy data)");
    c_spec->add_option("--out", spectrum.out, "output CSV path ('-' = stdout)");
    c_spec->add_flag("--dry-run", spectrum.dry_run,
                     "print resolved parameters and exit");

    DelayMapArgs dmap;
    auto* c_map = app.add_subcommand("delay-map",
                                     "2D sweep: control power (or an omega_10 "
                                     "table) vs probe detuning");
    c_map->add_option("--device", dmap.device, "device parameter file")->required();
    c_map->add_option("--omega-table", dmap.omega_table,
                      "CSV of omega_10_mhz,gamma_r_10_mhz,gamma_10_mhz rows "
                      "(replaces the power axis)");
    c_map->add_option("--pc-min-dbm", dmap.pc_min_dbm, "power axis start");
    c_map->add_option("--pc-max-dbm", dmap.pc_max_dbm, "power axis end");
    c_map->add_option("--pc-points", dmap.pc_points, "power axis points");
    c_map->add_option("--delta-min-mhz", dmap.delta_min_mhz, "detuning start");
    c_map->add_option("--delta-max-mhz", dmap.delta_max_mhz, "detuning end");
    c_map->add_option("--points", dmap.points, "detuning points");
    c_map->add_option("--delta-c-mhz", dmap.delta_c_mhz, "control detuning");
    c_map->add_option("--atten-db", dmap.attenuation_db, "line-to-chip attenuation");
    c_map->add_option("--threads,-j", dmap.threads,
                      "parallel rows (capped by QDELAY_THREADS)");
    c_map->add_flag("--allow-coarse", dmap.allow_coarse,
                    "skip the phase-aliasing grid guard");
    c_map->add_option("--smooth-window", dmap.smooth_window,
                      "moving-average half-width on the phase (noisy data)");
    c_map->add_option("--out", dmap.out, "output CSV path");
    c_map->add_flag("--dry-run", dmap.dry_run, "print resolved parameters and exit");

    PulseArgs pulse;
    auto* c_pulse = app.add_subcommand("pulse",
                                       "Gaussian pulse scattering and delay "
                                       "extraction");
    c_pulse->add_option("--device", pulse.device, "device parameter file")
        ->required();
    c_pulse->add_option("--sigma-ns", pulse.sigma_ns, "pulse width");
    c_pulse->add_option("--t0-ns", pulse.t0_ns, "pulse center (default 5 sigma)");
    c_pulse->add_option("--dt-ns", pulse.dt_ns, "sample step");
    c_pulse->add_option("--span-ns", pulse.span_ns, "trace length (default 10 sigma)");
    c_pulse->add_option("--omega-p-mhz", pulse.omega_p_mhz,
                        "probe Rabi amplitude, cyclic MHz");
    c_pulse->add_option("--pp-dbm", pulse.pp_dbm, "probe line power in dBm");
    add_control_options(c_pulse, pulse.control);
    c_pulse->add_option("--delta-p-mhz", pulse.delta_p_mhz, "probe detuning");
    c_pulse->add_option("--delta-c-mhz", pulse.delta_c_mhz, "control detuning");
    c_pulse->add_option("--tol", pulse.tol, "integrator relative tolerance");
    c_pulse->add_flag("--reduced", pulse.reduced,
                      "use the frozen-ground-state coherence equations");
    c_pulse->add_flag("--oracle", pulse.oracle,
                      "narrowband r*shift oracle instead of the master equation");
    c_pulse->add_option("--out", pulse.out, "trace CSV path");
    c_pulse->add_flag("--dry-run", pulse.dry_run,
                      "print resolved parameters and exit");

    PulseSweepArgs sweep;
    auto* c_sweep = app.add_subcommand("pulse-sweep",
                                       "repeat the pulse pipeline over one "
                                       "swept parameter");
    c_sweep->add_option("--device", sweep.base.device, "device parameter file")
        ->required();
    c_sweep->add_option("--sweep", sweep.sweep,
                        "swept parameter: sigma-ns | delta-p-mhz | pc-dbm");
    c_sweep->add_option("--values", sweep.values, "swept values")
        ->delimiter(',')
        ->required();
    c_sweep->add_option("--sigma-ns", sweep.base.sigma_ns, "pulse width");
    c_sweep->add_option("--t0-ns", sweep.base.t0_ns, "pulse center");
    c_sweep->add_option("--dt-ns", sweep.base.dt_ns, "sample step");
    c_sweep->add_option("--span-ns", sweep.base.span_ns, "trace length");
    c_sweep->add_option("--omega-p-mhz", sweep.base.omega_p_mhz, "probe Rabi");
    c_sweep->add_option("--pp-dbm", sweep.base.pp_dbm, "probe line power");
    add_control_options(c_sweep, sweep.base.control);
    c_sweep->add_option("--delta-p-mhz", sweep.base.delta_p_mhz, "probe detuning");
    c_sweep->add_option("--delta-c-mhz", sweep.base.delta_c_mhz, "control detuning");
    c_sweep->add_option("--tol", sweep.base.tol, "integrator tolerance");
    c_sweep->add_flag("--reduced", sweep.base.reduced, "reduced Bloch path");
    c_sweep->add_flag("--oracle", sweep.base.oracle, "narrowband oracle path");
    c_sweep->add_option("--threads,-j", sweep.threads,
                        "parallel simulations (capped by QDELAY_THREADS)");
    c_sweep->add_option("--out", sweep.out, "summary CSV path");
    c_sweep->add_flag("--dry-run", sweep.base.dry_run,
                      "print resolved parameters and exit");

    FitArgs f_circle, f_spec, f_power, f_two;
    auto* c_fc = app.add_subcommand("fit-circle", "IQ-plane circle fit");
    c_fc->add_option("--input", f_circle.input, "CSV of IQ points")->required();
    c_fc->add_option("--out", f_circle.out, "report path");
    c_fc->add_flag("--dry-run", f_circle.dry_run, "");

    auto* c_fs = app.add_subcommand("fit-spectrum",
                                    "recover omega_10, Gamma_10, gamma_10 from a "
                                    "weak spectrum");
    c_fs->add_option("--input", f_spec.input, "CSV: freq_mhz,re_r,im_r or "
                                              "freq_mhz,abs_r,phase_rad")
        ->required();
    c_fs->add_option("--f0-mhz", f_spec.f0_mhz,
                     "nominal resonance (default: farthest point from r = 1)");
    c_fs->add_option("--out", f_spec.out, "report path");
    c_fs->add_flag("--dry-run", f_spec.dry_run, "");

    auto* c_fp = app.add_subcommand("fit-power",
                                    "recover k_10 (or attenuation) from the "
                                    "resonant saturation curve");
    c_fp->add_option("--input", f_power.input, "CSV: p_dbm,re_r,im_r")->required();
    c_fp->add_option("--device", f_power.device, "device parameter file")
        ->required();
    c_fp->add_option("--atten-db", f_power.attenuation_db,
                     "pin the attenuation, fit k_10");
    c_fp->add_option("--k10", f_power.k_10, "pin k_10, fit the attenuation");
    c_fp->add_option("--out", f_power.out, "report path");
    c_fp->add_flag("--dry-run", f_power.dry_run, "");

    auto* c_ft = app.add_subcommand("fit-two-tone",
                                    "recover gamma_20 from an ATS power map");
    c_ft->add_option("--input", f_two.input,
                     "CSV: pc_dbm,delta_p_mhz,re_r,im_r grid")
        ->required();
    c_ft->add_option("--device", f_two.device, "device parameter file")->required();
    c_ft->add_option("--atten-db", f_two.attenuation_db, "line-to-chip attenuation");
    c_ft->add_option("--out", f_two.out, "report path");
    c_ft->add_flag("--dry-run", f_two.dry_run, "");

    FeaturesArgs features;
    auto* c_feat = app.add_subcommand("features",
                                      "singular pump, ATS threshold and "
                                      "zero-delay boundary of a device");
    c_feat->add_option("--device", features.device, "device parameter file")
        ->required();
    add_control_options(c_feat, features.control);
    c_feat->add_option("--out", features.out, "report path");
    c_feat->add_flag("--dry-run", features.dry_run, "");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (c_spec->parsed())
            return cmd_spectrum(spectrum);
        if (c_map->parsed())
            return cmd_delay_map(dmap);
        if (c_pulse->parsed())
            return cmd_pulse(pulse);
        if (c_sweep->parsed())
            return cmd_pulse_sweep(sweep);
        if (c_fc->parsed())
            return cmd_fit_circle(f_circle);
        if (c_fs->parsed())
            return cmd_fit_spectrum(f_spec);
        if (c_fp->parsed())
            return cmd_fit_power(f_power);
        if (c_ft->parsed())
            return cmd_fit_two_tone(f_two);
        if (c_feat->parsed())
            return cmd_features(features);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
