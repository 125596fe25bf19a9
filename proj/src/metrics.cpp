#include <phasessl/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace phasessl {

long long ConfusionMatrix::total() const
{
    return std::accumulate(counts.begin(), counts.end(), 0LL);
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int num_classes)
{
    if (truth.size() != predicted.size())
        throw std::invalid_argument("confusion: label lists differ in length");
    if (num_classes < 1)
        throw std::invalid_argument("confusion: num_classes must be positive");
    ConfusionMatrix cm{num_classes, std::vector<long long>(static_cast<std::size_t>(num_classes) * num_classes, 0)};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes)
            throw std::invalid_argument("confusion: label out of range");
        ++cm.counts[static_cast<std::size_t>(truth[i]) * num_classes + predicted[i]];
    }
    return cm;
}

MetricsReport report(const ConfusionMatrix& cm, std::uint64_t seed)
{
    const long long total = cm.total();
    if (cm.num_classes < 1 || total == 0)
        throw std::invalid_argument("report: empty confusion matrix");
    const int c = cm.num_classes;
    MetricsReport r;
    r.seed = seed;
    r.n_samples = total;
    long long trace = 0;
    for (int k = 0; k < c; ++k) {
        const long long tp = cm.at(k, k);
        long long col = 0;
        long long row = 0;
        for (int j = 0; j < c; ++j) {
            col += cm.at(j, k);
            row += cm.at(k, j);
        }
        trace += tp;
        ClassMetrics m;
        if (col == 0)
            m.precision_undefined = true;
        else
            m.precision = static_cast<double>(tp) / static_cast<double>(col);
        if (row == 0)
            m.recall_undefined = true;
        else
            m.recall = static_cast<double>(tp) / static_cast<double>(row);
        if (m.precision + m.recall == 0.0)
            m.f1_undefined = true;
        else
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        r.per_class.push_back(m);
    }
    for (const auto& m : r.per_class) {
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
    }
    r.macro_precision /= c;
    r.macro_recall /= c;
    r.macro_f1 /= c;
    r.top1 = 100.0 * static_cast<double>(trace) / static_cast<double>(total);
    return r;
}

double mean_of(std::span<const double> v)
{
    if (v.empty())
        return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v)
{
    if (v.size() < 2)
        return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

AggregateReport aggregate(std::span<const MetricsReport> reports)
{
    if (reports.empty())
        throw std::invalid_argument("aggregate: no reports");
    const std::size_t c = reports.front().per_class.size();
    for (const auto& r : reports)
        if (r.per_class.size() != c)
            throw std::invalid_argument("aggregate: reports disagree on class count");

    AggregateReport a;
    a.count = reports.size();
    a.mean.per_class.resize(c);
    a.sd.per_class.resize(c);
    std::vector<double> v(reports.size());
    auto fold = [&](auto getter, double& mean_out, double& sd_out) {
        for (std::size_t i = 0; i < reports.size(); ++i)
            v[i] = getter(reports[i]);
        mean_out = mean_of(v);
        sd_out = sample_sd(v);
    };
    for (std::size_t k = 0; k < c; ++k) {
        fold([k](const MetricsReport& r) { return r.per_class[k].precision; }, a.mean.per_class[k].precision,
             a.sd.per_class[k].precision);
        fold([k](const MetricsReport& r) { return r.per_class[k].recall; }, a.mean.per_class[k].recall,
             a.sd.per_class[k].recall);
        fold([k](const MetricsReport& r) { return r.per_class[k].f1; }, a.mean.per_class[k].f1,
             a.sd.per_class[k].f1);
    }
    fold([](const MetricsReport& r) { return r.macro_precision; }, a.mean.macro_precision, a.sd.macro_precision);
    fold([](const MetricsReport& r) { return r.macro_recall; }, a.mean.macro_recall, a.sd.macro_recall);
    fold([](const MetricsReport& r) { return r.macro_f1; }, a.mean.macro_f1, a.sd.macro_f1);
    fold([](const MetricsReport& r) { return r.top1; }, a.mean.top1, a.sd.top1);
    double n = 0.0;
    double nsd = 0.0;
    fold([](const MetricsReport& r) { return static_cast<double>(r.n_samples); }, n, nsd);
    a.mean.n_samples = std::llround(n);
    return a;
}

// ---------------------------------------------------------------------------
// Student t

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x)
{
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny)
        d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps)
            break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0 && b > 0.0))
        throw std::invalid_argument("incomplete beta: a and b must be positive");
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, int dof)
{
    if (dof < 1)
        throw std::invalid_argument("student_t_cdf: dof must be >= 1");
    if (std::isinf(t))
        return t > 0 ? 1.0 : 0.0;
    const double nu = dof;
    const double tail = 0.5 * regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
    return t >= 0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("paired_t_test: sequences differ in length");
    if (a.size() < 2)
        throw std::invalid_argument("paired_t_test: need at least 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        d[i] = a[i] - b[i];
    TTestResult r;
    r.degrees_of_freedom = static_cast<int>(d.size()) - 1;
    const double m = mean_of(d);
    const double sd = sample_sd(d);
    if (sd == 0.0) {
        if (m == 0.0) {
            r.t_statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.t_statistic = m > 0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
            r.infinite_t = true;
        }
        return r;
    }
    r.t_statistic = m / (sd / std::sqrt(static_cast<double>(d.size())));
    const double nu = r.degrees_of_freedom;
    r.p_value = std::clamp(
        regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + r.t_statistic * r.t_statistic)), 0.0, 1.0);
    return r;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const ConfusionMatrix& cm)
{
    nlohmann::json rows = nlohmann::json::array();
    for (int t = 0; t < cm.num_classes; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < cm.num_classes; ++p)
            row.push_back(cm.at(t, p));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json to_json(const MetricsReport& r)
{
    nlohmann::json per = nlohmann::json::array();
    for (const auto& m : r.per_class) {
        nlohmann::json e = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
        nlohmann::json undefined = nlohmann::json::array();
        if (m.precision_undefined) undefined.push_back("precision");
        if (m.recall_undefined) undefined.push_back("recall");
        if (m.f1_undefined) undefined.push_back("f1");
        e["undefined"] = undefined;
        per.push_back(e);
    }
    return {{"per_class", per},
            {"averaging", "macro"},
            {"precision", r.macro_precision},
            {"recall", r.macro_recall},
            {"f1", r.macro_f1},
            {"top1", r.top1},
            {"n_samples", r.n_samples},
            {"seed", r.seed}};
}

MetricsReport metrics_report_from_json(const nlohmann::json& j)
{
    MetricsReport r;
    for (const auto& e : j.at("per_class")) {
        ClassMetrics m;
        m.precision = e.at("precision").get<double>();
        m.recall = e.at("recall").get<double>();
        m.f1 = e.at("f1").get<double>();
        for (const auto& u : e.value("undefined", nlohmann::json::array())) {
            const auto s = u.get<std::string>();
            m.precision_undefined |= s == "precision";
            m.recall_undefined |= s == "recall";
            m.f1_undefined |= s == "f1";
        }
        r.per_class.push_back(m);
    }
    r.macro_precision = j.at("precision").get<double>();
    r.macro_recall = j.at("recall").get<double>();
    r.macro_f1 = j.at("f1").get<double>();
    r.top1 = j.at("top1").get<double>();
    r.n_samples = j.at("n_samples").get<long long>();
    r.seed = j.value("seed", std::uint64_t{0});
    return r;
}

nlohmann::json to_json(const AggregateReport& a)
{
    auto sd = to_json(a.sd);
    sd.erase("n_samples");
    sd.erase("seed");
    sd.erase("averaging");
    for (auto& e : sd["per_class"])
        e.erase("undefined");
    auto mean = to_json(a.mean);
    mean.erase("seed");
    for (auto& e : mean["per_class"])
        e.erase("undefined");
    return {{"count", a.count}, {"mean", mean}, {"sd", sd}};
}

nlohmann::json to_json(const TTestResult& t)
{
    nlohmann::json j = {{"dof", t.degrees_of_freedom}, {"p_value", t.p_value}, {"infinite_t", t.infinite_t}};
    // JSON has no infinity; the sign survives in the flag plus a string.
    if (std::isinf(t.t_statistic))
        j["t"] = t.t_statistic > 0 ? "+inf" : "-inf";
    else
        j["t"] = t.t_statistic;
    return j;
}

}  // namespace phasessl
