#include "terraseg/metrics.hpp"

#include <cstdio>

namespace terraseg {
namespace {

void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedMetric("metrics are undefined for an empty confusion matrix");
}

double category_iou(const ConfusionMatrix& cm, int i) {
  const double tp = double(cm.at(i, i));
  const double uni = double(cm.truth_count(i) + cm.predicted_count(i)) - tp;
  return uni > 0.0 ? tp / uni : 0.0;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto v : counts_) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int i = 0; i < n_; ++i) t += at(i, i);
  return t;
}

std::uint64_t ConfusionMatrix::truth_count(int category) const {
  std::uint64_t t = 0;
  for (int j = 0; j < n_; ++j) t += at(category, j);
  return t;
}

std::uint64_t ConfusionMatrix::predicted_count(int category) const {
  std::uint64_t t = 0;
  for (int i = 0; i < n_; ++i) t += at(i, category);
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw InvalidInput("confusion matrices differ in category count");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(const SparseLabelMap& predicted, const SparseLabelMap& ground_truth, int num_categories) {
  if (predicted.height() != ground_truth.height() || predicted.width() != ground_truth.width())
    throw InvalidInput("prediction and ground truth differ in shape");
  if (num_categories <= 0) throw InvalidInput("category count must be positive");
  ConfusionMatrix cm(num_categories);
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const int truth = ground_truth[i];
    if (truth == kUnlabeled) continue;
    const int pred = predicted[i];
    if (truth < 0 || truth >= num_categories || pred < 0 || pred >= num_categories)
      throw InvalidInput("category index out of range in confusion()");
    ++cm.at(truth, pred);
  }
  return cm;
}

ConfusionMatrix confusion_batch(std::span<const LabelPair> pairs, int num_categories) {
  std::vector<ConfusionMatrix> parts(pairs.size(), ConfusionMatrix(num_categories));
  const long n = long(pairs.size());
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    try {
      parts[i] = confusion(*pairs[i].predicted, *pairs[i].ground_truth, num_categories);
    } catch (const Error&) {
#pragma omp critical
      failed = true;
    }
  }
  if (failed) return confusion_batch_serial(pairs, num_categories);  // rethrows the first error in order
  ConfusionMatrix total(num_categories);
  for (const auto& part : parts) total += part;
  return total;
}

ConfusionMatrix confusion_batch_serial(std::span<const LabelPair> pairs, int num_categories) {
  ConfusionMatrix total(num_categories);
  for (const auto& pair : pairs) total += confusion(*pair.predicted, *pair.ground_truth, num_categories);
  return total;
}

double acc(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return double(cm.trace()) / double(cm.total());
}

double macc(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double sum = 0.0;
  int present = 0;
  for (int i = 0; i < cm.num_categories(); ++i) {
    const auto truth = cm.truth_count(i);
    if (truth == 0) continue;
    sum += double(cm.at(i, i)) / double(truth);
    ++present;
  }
  return sum / present;
}

double miou(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double sum = 0.0;
  int present = 0;
  for (int i = 0; i < cm.num_categories(); ++i) {
    if (cm.truth_count(i) == 0) continue;
    sum += category_iou(cm, i);
    ++present;
  }
  return sum / present;
}

double fwiou(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  const double total = double(cm.total());
  double sum = 0.0;
  for (int i = 0; i < cm.num_categories(); ++i) {
    const auto truth = cm.truth_count(i);
    if (truth == 0) continue;
    sum += double(truth) / total * category_iou(cm, i);
  }
  return sum;
}

MetricsReport summarize(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.total = cm.total();
  r.acc = acc(cm);
  r.macc = macc(cm);
  r.miou = miou(cm);
  r.fwiou = fwiou(cm);
  for (int i = 0; i < cm.num_categories(); ++i) {
    CategoryScore s;
    s.pixels = cm.truth_count(i);
    s.present = s.pixels > 0;
    if (s.present) {
      s.recall = double(cm.at(i, i)) / double(s.pixels);
      s.iou = category_iou(cm, i);
    }
    r.categories.push_back(s);
  }
  return r;
}

std::string metrics_csv(const MetricsReport& report, const std::vector<std::string>& names) {
  std::string out = "category,pixels,recall,iou\n";
  for (std::size_t i = 0; i < report.categories.size(); ++i) {
    const auto& s = report.categories[i];
    const std::string name = i < names.size() ? names[i] : "c" + std::to_string(i);
    out += name + "," + std::to_string(s.pixels) + ",";
    out += s.present ? fmt(s.recall) + "," + fmt(s.iou) : std::string(",");
    out += "\n";
  }
  const std::string total = std::to_string(report.total);
  out += "ACC," + total + "," + fmt(report.acc) + ",\n";
  out += "MACC," + total + "," + fmt(report.macc) + ",\n";
  out += "mIoU," + total + ",," + fmt(report.miou) + "\n";
  out += "FWIoU," + total + ",," + fmt(report.fwiou) + "\n";
  return out;
}

}  // namespace terraseg
