#include <phasessl/dataset.hpp>
#include <phasessl/image_io.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace phasessl {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return fields;
}

std::optional<int> parse_label(const std::string& field, const std::vector<std::string>& class_names,
                               std::size_t line_no)
{
    if (field.empty())
        return std::nullopt;
    const auto it = std::find(class_names.begin(), class_names.end(), field);
    if (it != class_names.end())
        return static_cast<int>(it - class_names.begin());
    int v = -1;
    std::size_t used = 0;
    try {
        v = std::stoi(field, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != field.size() || v < 0 || v >= static_cast<int>(class_names.size()))
        throw DataError("manifest line " + std::to_string(line_no) + ": unknown class '" + field + "'");
    return v;
}

long long rounded_count(double fraction, std::size_t n)
{
    return std::llround(fraction * static_cast<double>(n));
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

const SampleRecord* DatasetManifest::find(std::string_view sample_id) const
{
    for (const auto& r : records)
        if (r.sample_id == sample_id)
            return &r;
    return nullptr;
}

std::filesystem::path DatasetManifest::resolve(const SampleRecord& r) const
{
    if (r.image_path.is_absolute() || base_dir.empty())
        return r.image_path;
    return base_dir / r.image_path;
}

DatasetManifest parse_manifest(std::string_view csv, const std::filesystem::path& base_dir,
                               const std::vector<std::string>& class_names)
{
    DatasetManifest m;
    m.class_names = class_names;
    m.base_dir = base_dir;
    std::set<std::string> seen;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos <= csv.size()) {
        const auto nl = csv.find('\n', pos);
        const auto line = csv.substr(pos, nl == std::string_view::npos ? csv.npos : nl - pos);
        pos = nl == std::string_view::npos ? csv.size() + 1 : nl + 1;
        ++line_no;
        if (trim(line).empty())
            continue;
        const auto fields = split_csv_line(line);
        if (!header_seen) {
            const std::vector<std::string> expected = {"sample_id", "image_path", "label", "subject_id"};
            if (fields != expected)
                throw DataError("manifest line " + std::to_string(line_no) +
                                ": expected header sample_id,image_path,label,subject_id");
            header_seen = true;
            continue;
        }
        if (fields.size() != 4)
            throw DataError("manifest line " + std::to_string(line_no) + ": expected 4 fields, got " +
                            std::to_string(fields.size()));
        SampleRecord r;
        r.sample_id = fields[0];
        r.image_path = fields[1];
        r.label = parse_label(fields[2], class_names, line_no);
        r.subject_id = fields[3].empty() ? fields[0] : fields[3];
        if (r.sample_id.empty())
            throw DataError("manifest line " + std::to_string(line_no) + ": empty sample_id");
        if (!seen.insert(r.sample_id).second)
            throw DataError("manifest line " + std::to_string(line_no) + ": duplicate sample_id '" +
                            r.sample_id + "'");
        m.records.push_back(std::move(r));
    }
    if (!header_seen)
        throw DataError("manifest is empty");
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path, const std::vector<std::string>& class_names)
{
    std::string text;
    try {
        text = io::read_text_file(path);
    } catch (const std::runtime_error& e) {
        throw DataError(e.what());
    }
    return parse_manifest(text, path.parent_path(), class_names);
}

std::string format_manifest(const DatasetManifest& m)
{
    std::ostringstream out;
    out << "sample_id,image_path,label,subject_id\n";
    for (const auto& r : m.records) {
        out << r.sample_id << ',' << r.image_path.generic_string() << ',';
        if (r.label)
            out << *r.label;
        out << ',' << r.subject_id << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Splits

bool is_test_role(std::string_view role)
{
    return role.starts_with(kRoleTest);
}

void SplitConfig::validate() const
{
    auto in_open = [](double v) { return v > 0.0 && v < 1.0; };
    if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0))
        throw std::invalid_argument("split: labeled_fraction must lie in (0,1]");
    if (!in_open(val_fraction) || !in_open(stop_fraction) || !in_open(test_fraction))
        throw std::invalid_argument("split: val/stop/test fractions must lie in (0,1)");
    if (val_fraction + stop_fraction + test_fraction >= 1.0)
        throw std::invalid_argument("split: val + stop + test fractions must leave a training pool");
    if (num_repeats < 1)
        throw std::invalid_argument("split: num_repeats must be >= 1");
}

const std::vector<std::string>& SplitAssignment::ids(const std::string& role) const
{
    static const std::vector<std::string> none;
    const auto it = roles.find(role);
    return it == roles.end() ? none : it->second;
}

std::optional<std::string> SplitAssignment::role_of(std::string_view sample_id) const
{
    for (const auto& [role, list] : roles)
        if (std::binary_search(list.begin(), list.end(), sample_id))
            return role;
    return std::nullopt;
}

std::vector<SplitAssignment> make_splits(const DatasetManifest& m, const SplitConfig& cfg)
{
    cfg.validate();
    const int num_classes = m.num_classes();

    // Stratum of a subject = class of its first labeled record in manifest order.
    std::map<std::string, int> subject_class;
    std::map<std::string, std::vector<std::size_t>> subject_records;
    std::vector<std::size_t> class_counts(static_cast<std::size_t>(num_classes), 0);
    std::vector<std::size_t> unlabeled_records;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        const auto& r = m.records[i];
        if (!r.label) {
            unlabeled_records.push_back(i);
            continue;
        }
        subject_class.emplace(r.subject_id, *r.label);
        subject_records[r.subject_id].push_back(i);
        ++class_counts[static_cast<std::size_t>(*r.label)];
    }
    for (int c = 0; c < num_classes; ++c)
        if (class_counts[static_cast<std::size_t>(c)] == 0)
            throw DataError("class '" + m.class_names[static_cast<std::size_t>(c)] + "' has no labeled samples");

    auto by_id = [&](std::size_t a, std::size_t b) { return m.records[a].sample_id < m.records[b].sample_id; };

    std::vector<SplitAssignment> out;
    for (int rep = 0; rep < cfg.num_repeats; ++rep) {
        SplitAssignment sa;
        sa.repeat = rep;
        sa.seed = cfg.seed + static_cast<std::uint64_t>(rep);
        sa.labeled_fraction = cfg.labeled_fraction;
        std::mt19937_64 rng(sa.seed);
        for (const char* role : {kRoleLabeled, kRoleUnlabeled, kRoleVal, kRoleStop, kRoleTest})
            sa.roles[role];

        std::set<std::string> test_subjects;
        for (int c = 0; c < num_classes; ++c) {
            const auto& cname = m.class_names[static_cast<std::size_t>(c)];
            std::vector<std::string> subjects;
            for (const auto& [s, sc] : subject_class)
                if (sc == c)
                    subjects.push_back(s);
            std::shuffle(subjects.begin(), subjects.end(), rng);
            const auto target = rounded_count(cfg.test_fraction, class_counts[static_cast<std::size_t>(c)]);
            if (target < 1)
                throw DataError("class '" + cname + "' is too small for test_fraction");
            long long taken = 0;
            for (const auto& s : subjects) {
                if (taken >= target)
                    break;
                test_subjects.insert(s);
                taken += static_cast<long long>(subject_records[s].size());
            }
        }

        std::vector<std::vector<std::size_t>> remaining(static_cast<std::size_t>(num_classes));
        for (const auto& [s, idx] : subject_records) {
            for (auto i : idx) {
                if (test_subjects.count(s))
                    sa.roles[kRoleTest].push_back(m.records[i].sample_id);
                else
                    remaining[static_cast<std::size_t>(*m.records[i].label)].push_back(i);
            }
        }

        for (int c = 0; c < num_classes; ++c) {
            const auto& cname = m.class_names[static_cast<std::size_t>(c)];
            auto& pool = remaining[static_cast<std::size_t>(c)];
            std::sort(pool.begin(), pool.end(), by_id);
            std::shuffle(pool.begin(), pool.end(), rng);
            const auto n = class_counts[static_cast<std::size_t>(c)];
            const auto n_val = rounded_count(cfg.val_fraction, n);
            const auto n_stop = rounded_count(cfg.stop_fraction, n);
            if (n_val < 1 || n_stop < 1)
                throw DataError("class '" + cname + "' is too small for val/stop fractions");
            if (n_val + n_stop >= static_cast<long long>(pool.size()))
                throw DataError("class '" + cname + "' has no training samples left after val/stop/test");
            const std::size_t train_size = pool.size() - static_cast<std::size_t>(n_val + n_stop);
            const auto n_lab = rounded_count(cfg.labeled_fraction, train_size);
            if (n_lab < 1)
                throw DataError("class '" + cname + "' is too small for labeled_fraction");
            std::size_t k = 0;
            for (long long j = 0; j < n_val; ++j)
                sa.roles[kRoleVal].push_back(m.records[pool[k++]].sample_id);
            for (long long j = 0; j < n_stop; ++j)
                sa.roles[kRoleStop].push_back(m.records[pool[k++]].sample_id);
            for (long long j = 0; j < n_lab; ++j)
                sa.roles[kRoleLabeled].push_back(m.records[pool[k++]].sample_id);
            for (; k < pool.size(); ++k)
                sa.roles[kRoleUnlabeled].push_back(m.records[pool[k]].sample_id);
        }
        for (auto i : unlabeled_records)
            sa.roles[kRoleUnlabeled].push_back(m.records[i].sample_id);
        for (auto& [role, ids] : sa.roles)
            std::sort(ids.begin(), ids.end());
        out.push_back(std::move(sa));
    }
    return out;
}

nlohmann::json split_to_json(const SplitAssignment& s)
{
    nlohmann::json roles = nlohmann::json::object();
    for (const auto& [role, ids] : s.roles)
        roles[role] = ids;
    return {{"repeat", s.repeat}, {"seed", s.seed}, {"labeled_fraction", s.labeled_fraction}, {"roles", roles}};
}

SplitAssignment split_from_json(const nlohmann::json& j)
{
    SplitAssignment s;
    try {
        s.repeat = j.at("repeat").get<int>();
        s.seed = j.value("seed", std::uint64_t{0});
        s.labeled_fraction = j.value("labeled_fraction", 0.0);
        for (const auto& [role, ids] : j.at("roles").items()) {
            auto list = ids.get<std::vector<std::string>>();
            std::sort(list.begin(), list.end());
            s.roles[role] = std::move(list);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed split document: ") + e.what());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Image preparation

GrayImage normalize_image(const GrayImage& img)
{
    if (img.empty())
        throw std::invalid_argument("normalize_image: empty image");
    GrayImage out(img.width(), img.height());
    const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
    if (*lo == *hi)
        return out;
    const double n = static_cast<double>(img.size());
    double mean = 0.0;
    for (double v : img.values())
        mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : img.values())
        var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    for (std::size_t i = 0; i < img.size(); ++i)
        out[i] = (img[i] - mean) / sd;
    return out;
}

GrayImage bilinear_resample(const GrayImage& img, int target_width, int target_height)
{
    if (target_width < 1 || target_height < 1)
        throw std::invalid_argument("resize: degenerate target dimensions");
    if (img.empty())
        throw std::invalid_argument("resize: empty source image");
    if (img.same_dims(target_width, target_height))
        return img;
    const int sw = img.width();
    const int sh = img.height();
    const double fx = static_cast<double>(sw) / target_width;
    const double fy = static_cast<double>(sh) / target_height;
    GrayImage out(target_width, target_height);
    for (int y = 0; y < target_height; ++y) {
        const double sy = std::clamp((y + 0.5) * fy - 0.5, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, sh - 1);
        const double wy = sy - y0;
        for (int x = 0; x < target_width; ++x) {
            const double sx = std::clamp((x + 0.5) * fx - 0.5, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, sw - 1);
            const double wx = sx - x0;
            const double top = (1.0 - wx) * img(x0, y0) + wx * img(x1, y0);
            const double bottom = (1.0 - wx) * img(x0, y1) + wx * img(x1, y1);
            out(x, y) = (1.0 - wy) * top + wy * bottom;
        }
    }
    return out;
}

GrayImage resize_image(const GrayImage& img, int target_width, int target_height)
{
    if (target_width < 8 || target_height < 8)
        throw std::invalid_argument("resize_image: target must be at least 8x8");
    return bilinear_resample(img, target_width, target_height);
}

}  // namespace phasessl
