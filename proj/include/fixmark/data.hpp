#pragma once
// Domain types: fixation records as they appear in the raw data, ordered
// per-(subject, image) fixation sequences, and the indexed dataset.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fixmark {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

enum class ColourScheme { Normal, Abnormal, Grayscale };
enum class Orientation { Landscape, Portrait };

inline const char* to_token(ColourScheme s) {
    switch (s) {
        case ColourScheme::Normal: return "normal";
        case ColourScheme::Abnormal: return "abnormal";
        case ColourScheme::Grayscale: return "grayscale";
    }
    throw std::logic_error("unreachable colour scheme");
}

inline const char* to_token(Orientation o) {
    return o == Orientation::Landscape ? "landscape" : "portrait";
}

// Short labels used in rendered test listings ("Norm - Abno: ...").
inline const char* short_label(ColourScheme s) {
    switch (s) {
        case ColourScheme::Normal: return "Norm";
        case ColourScheme::Abnormal: return "Abno";
        case ColourScheme::Grayscale: return "Gray";
    }
    throw std::logic_error("unreachable colour scheme");
}

inline std::string lower_copy(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::optional<ColourScheme> parse_colour_scheme(const std::string& token) {
    const std::string t = lower_copy(token);
    if (t == "normal") return ColourScheme::Normal;
    if (t == "abnormal") return ColourScheme::Abnormal;
    if (t == "grayscale") return ColourScheme::Grayscale;
    return std::nullopt;
}

inline std::optional<Orientation> parse_orientation(const std::string& token) {
    const std::string t = lower_copy(token);
    if (t == "landscape") return Orientation::Landscape;
    if (t == "portrait") return Orientation::Portrait;
    return std::nullopt;
}

// One row of the raw data: the eight Table-1-style columns.
struct FixationRecord {
    double x = 0.0;
    double y = 0.0;
    double duration_ms = 0.0;   // > 0
    int fixation_index = 0;     // 1-based order within its sequence
    std::string subject_id;
    ColourScheme colour_scheme = ColourScheme::Normal;
    int image_id = 0;
    Orientation orientation = Orientation::Landscape;

    friend bool operator==(const FixationRecord&, const FixationRecord&) = default;
};

// Ordered fixations of one subject on one image.
struct FixationSequence {
    std::string subject_id;
    int image_id = 0;
    ColourScheme colour_scheme = ColourScheme::Normal;
    Orientation orientation = Orientation::Landscape;
    std::vector<Point2> points;
    std::vector<double> durations;          // parallel to points, all > 0
    std::vector<int> fixation_indices;      // strictly increasing

    std::size_t size() const { return points.size(); }

    friend bool operator==(const FixationSequence&, const FixationSequence&) = default;
};

struct ImageSchemeKey {
    int image_id = 0;
    ColourScheme scheme = ColourScheme::Normal;

    friend auto operator<=>(const ImageSchemeKey&, const ImageSchemeKey&) = default;
};

// All sequences, indexable by (image, scheme) and by subject.
class Dataset {
public:
    Dataset() = default;

    void add(FixationSequence seq) {
        for (const auto& existing : sequences_) {
            if (existing.subject_id == seq.subject_id && existing.image_id == seq.image_id) {
                throw std::invalid_argument("duplicate sequence for subject '" + seq.subject_id +
                                            "' on image " + std::to_string(seq.image_id));
            }
        }
        sequences_.push_back(std::move(seq));
    }

    const std::vector<FixationSequence>& sequences() const { return sequences_; }
    bool empty() const { return sequences_.empty(); }
    std::size_t size() const { return sequences_.size(); }

    // Sequences for one (image, scheme), ordered by subject id.
    std::vector<const FixationSequence*> find(int image_id, ColourScheme scheme) const {
        std::vector<const FixationSequence*> out;
        for (const auto& s : sequences_) {
            if (s.image_id == image_id && s.colour_scheme == scheme) out.push_back(&s);
        }
        std::sort(out.begin(), out.end(), [](const FixationSequence* a, const FixationSequence* b) {
            return a->subject_id < b->subject_id;
        });
        return out;
    }

    std::vector<const FixationSequence*> find_subject(const std::string& subject_id) const {
        std::vector<const FixationSequence*> out;
        for (const auto& s : sequences_) {
            if (s.subject_id == subject_id) out.push_back(&s);
        }
        std::sort(out.begin(), out.end(), [](const FixationSequence* a, const FixationSequence* b) {
            return a->image_id < b->image_id;
        });
        return out;
    }

    std::set<std::string> subjects(int image_id, ColourScheme scheme) const {
        std::set<std::string> out;
        for (const auto& s : sequences_) {
            if (s.image_id == image_id && s.colour_scheme == scheme) out.insert(s.subject_id);
        }
        return out;
    }

    std::set<ImageSchemeKey> image_scheme_keys() const {
        std::set<ImageSchemeKey> out;
        for (const auto& s : sequences_) out.insert({s.image_id, s.colour_scheme});
        return out;
    }

    std::set<ColourScheme> schemes() const {
        std::set<ColourScheme> out;
        for (const auto& s : sequences_) out.insert(s.colour_scheme);
        return out;
    }

    std::set<int> images(ColourScheme scheme) const {
        std::set<int> out;
        for (const auto& s : sequences_) {
            if (s.colour_scheme == scheme) out.insert(s.image_id);
        }
        return out;
    }

    std::set<std::string> all_subjects() const {
        std::set<std::string> out;
        for (const auto& s : sequences_) out.insert(s.subject_id);
        return out;
    }

private:
    std::vector<FixationSequence> sequences_;
};

// Partition records into per-(subject, image) sequences ordered by fixation
// index. Gaps in the index are tolerated; duplicates are an error.
inline Dataset group_sequences(const std::vector<FixationRecord>& records) {
    std::map<std::pair<std::string, int>, std::vector<const FixationRecord*>> groups;
    for (const auto& r : records) {
        groups[{r.subject_id, r.image_id}].push_back(&r);
    }
    Dataset dataset;
    for (auto& [key, rows] : groups) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const FixationRecord* a, const FixationRecord* b) {
                             return a->fixation_index < b->fixation_index;
                         });
        FixationSequence seq;
        seq.subject_id = key.first;
        seq.image_id = key.second;
        seq.colour_scheme = rows.front()->colour_scheme;
        seq.orientation = rows.front()->orientation;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0 && rows[i]->fixation_index == rows[i - 1]->fixation_index) {
                throw std::invalid_argument(
                    "duplicate fixation index " + std::to_string(rows[i]->fixation_index) +
                    " for subject '" + key.first + "' on image " + std::to_string(key.second));
            }
            seq.points.push_back({rows[i]->x, rows[i]->y});
            seq.durations.push_back(rows[i]->duration_ms);
            seq.fixation_indices.push_back(rows[i]->fixation_index);
        }
        dataset.add(std::move(seq));
    }
    return dataset;
}

struct TrainTestSplit {
    std::vector<const FixationSequence*> train;
    const FixationSequence* test = nullptr;
};

// Leave-one-subject-out split for one (image, scheme).
inline TrainTestSplit split_train_test(const Dataset& dataset, int image_id,
                                       ColourScheme scheme, const std::string& test_subject) {
    TrainTestSplit split;
    for (const auto* seq : dataset.find(image_id, scheme)) {
        if (seq->subject_id == test_subject) {
            split.test = seq;
        } else {
            split.train.push_back(seq);
        }
    }
    if (split.test == nullptr) {
        throw std::invalid_argument("no sequence for test subject '" + test_subject +
                                    "' on image " + std::to_string(image_id) +
                                    " scheme " + to_token(scheme));
    }
    return split;
}

} // namespace fixmark
