#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace phasessl {

struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<long long> counts;  // [true][predicted], row-major

    long long at(int truth, int predicted) const
    {
        return counts[static_cast<std::size_t>(truth) * num_classes + predicted];
    }
    long long total() const;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int num_classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Set when the ratio was 0/0 and reported as 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0.0;  // unweighted means over classes
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double top1 = 0.0;  // percent
    long long n_samples = 0;
    std::uint64_t seed = 0;
};

MetricsReport report(const ConfusionMatrix& cm, std::uint64_t seed = 0);

/// Per-field mean and sample (n-1) standard deviation; sd is 0 for one report.
struct AggregateReport {
    MetricsReport mean;
    MetricsReport sd;
    std::size_t count = 0;
};

AggregateReport aggregate(std::span<const MetricsReport> reports);

struct TTestResult {
    double t_statistic = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;  // two-sided
    bool infinite_t = false;  // zero-variance differences with non-zero mean
};

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);
/// Student-t cumulative distribution function.
double student_t_cdf(double t, int dof);

double mean_of(std::span<const double> v);
double sample_sd(std::span<const double> v);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const AggregateReport& a);
nlohmann::json to_json(const TTestResult& t);
MetricsReport metrics_report_from_json(const nlohmann::json& j);

}  // namespace phasessl
