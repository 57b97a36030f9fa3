#include "animgan/bvh.hpp"

#include "animgan/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace animgan::bvh {

namespace {

struct Token {
  std::string_view text;
  std::size_t line;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    tokens.push_back({text.substr(start, i - start), line});
  }
  return tokens;
}

class Reader {
 public:
  explicit Reader(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  const Token& peek() const {
    if (done()) {
      throw ParseError(last_line(), "unexpected end of document");
    }
    return tokens_[pos_];
  }
  const Token& next() {
    const Token& t = peek();
    ++pos_;
    return t;
  }
  void expect(std::string_view word) {
    const Token& t = next();
    if (t.text != word) {
      throw ParseError(t.line, "expected '" + std::string(word) + "', found '" +
                                   std::string(t.text) + "'");
    }
  }
  double number() {
    const Token& t = next();
    return to_double(t);
  }
  std::size_t count() {
    const Token& t = next();
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      throw ParseError(t.line, "expected a non-negative integer, found '" + std::string(t.text) + "'");
    }
    return value;
  }
  std::size_t last_line() const { return tokens_.empty() ? 1 : tokens_.back().line; }
  std::size_t position() const { return pos_; }
  const std::vector<Token>& tokens() const { return tokens_; }

  static double to_double(const Token& t) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !std::isfinite(value)) {
      throw ParseError(t.line, "expected a number, found '" + std::string(t.text) + "'");
    }
    return value;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

ChannelLayout parse_channels(Reader& in) {
  const std::size_t line = in.peek().line;
  const std::size_t n = in.count();
  ChannelLayout layout;
  std::string rotation_letters;
  bool seen_rotation = false;
  bool positions_before_rotation = false;
  bool positions_after_rotation = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Token& t = in.next();
    if (t.text.size() != 9 || (t.text.substr(1) != "position" && t.text.substr(1) != "rotation")) {
      throw ParseError(t.line, "unknown channel '" + std::string(t.text) + "'");
    }
    const char axis_letter = t.text[0];
    if (axis_letter != 'X' && axis_letter != 'Y' && axis_letter != 'Z') {
      throw ParseError(t.line, "unknown channel '" + std::string(t.text) + "'");
    }
    if (t.text.substr(1) == "position") {
      if (seen_rotation) {
        if (positions_before_rotation) {
          throw ParseError(t.line, "unsupported channel arrangement: split position channels");
        }
        positions_after_rotation = true;
      } else {
        positions_before_rotation = true;
      }
      if (!rotation_letters.empty() && rotation_letters.size() < 3) {
        throw ParseError(t.line, "unsupported channel arrangement: interleaved channels");
      }
      layout.position_axes.push_back(axis_letter - 'X');
    } else {
      if (positions_after_rotation) {
        throw ParseError(t.line, "unsupported channel arrangement: interleaved channels");
      }
      seen_rotation = true;
      rotation_letters.push_back(axis_letter);
    }
  }
  if (!rotation_letters.empty()) {
    EulerOrder order;
    if (!EulerOrder::parse(rotation_letters, order)) {
      throw ParseError(line, "unsupported channel arrangement: rotation channels '" +
                                 rotation_letters + "'");
    }
    layout.rotation = order;
  }
  if (!layout.position_axes.empty()) {
    const auto& p = layout.position_axes;
    const bool distinct = p.size() == 3 && p[0] != p[1] && p[1] != p[2] && p[0] != p[2];
    if (!distinct) {
      throw ParseError(line, "unsupported channel arrangement: positions need three distinct axes");
    }
  }
  layout.positions_first = !positions_after_rotation;
  return layout;
}

// Separate statements: the three reads must happen in x, y, z order.
Vec3 read_vec3(Reader& in) {
  const double x = in.number();
  const double y = in.number();
  const double z = in.number();
  return Vec3(x, y, z);
}

void parse_joint(Reader& in, std::vector<Joint>& joints, std::optional<int> parent) {
  const Token& name = in.next();
  Joint joint;
  joint.name = std::string(name.text);
  if (parent) {
    joint.parent = *parent;
  }
  in.expect("{");
  in.expect("OFFSET");
  joint.offset = read_vec3(in);
  in.expect("CHANNELS");
  joint.channels = parse_channels(in);
  const int index = static_cast<int>(joints.size());
  joints.push_back(std::move(joint));
  for (;;) {
    const Token& t = in.next();
    if (t.text == "}") {
      return;
    }
    if (t.text == "JOINT") {
      parse_joint(in, joints, index);
    } else if (t.text == "End") {
      in.expect("Site");
      in.expect("{");
      in.expect("OFFSET");
      const Vec3 end = read_vec3(in);
      in.expect("}");
      if (joints[static_cast<std::size_t>(index)].end_site) {
        throw ParseError(t.line, "joint has more than one End Site");
      }
      joints[static_cast<std::size_t>(index)].end_site = end;
    } else {
      throw ParseError(t.line, "unexpected token '" + std::string(t.text) + "' in joint body");
    }
  }
}

double snap_fps(double fps) {
  const double nearest = std::round(fps);
  if (nearest > 0.0 && std::abs(fps - nearest) <= 1e-4 * nearest) {
    return nearest;
  }
  return fps;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") {
    s = "0.000000";
  }
  return s;
}

// Offsets are printed with six decimals when that is lossless, otherwise in
// shortest round-trip form, so the hierarchy survives a round trip bit-exactly.
std::string offset_text(double v) {
  std::string s = fixed6(v);
  double back = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), back);
  if (back == v || (v == 0.0 && back == 0.0)) {
    return s;
  }
  return shortest(v);
}

const char* kAxisNames[3] = {"X", "Y", "Z"};

ChannelLayout effective_layout(const Skeleton& skeleton, std::size_t i) {
  if (skeleton.joint(i).channels) {
    return *skeleton.joint(i).channels;
  }
  ChannelLayout layout;
  if (i == 0) {
    layout.position_axes = {0, 1, 2};
  }
  layout.rotation = EulerOrder::zxy();
  return layout;
}

void write_joint(std::ostringstream& out, const Skeleton& skeleton,
                 const std::vector<std::vector<std::size_t>>& children, std::size_t i,
                 int depth) {
  const std::string indent(static_cast<std::size_t>(depth), '\t');
  const Joint& joint = skeleton.joint(i);
  out << indent << (depth == 0 ? "ROOT " : "JOINT ") << joint.name << "\n";
  out << indent << "{\n";
  out << indent << "\tOFFSET " << offset_text(joint.offset.x()) << ' '
      << offset_text(joint.offset.y()) << ' ' << offset_text(joint.offset.z()) << "\n";
  const ChannelLayout layout = effective_layout(skeleton, i);
  out << indent << "\tCHANNELS " << layout.channel_count();
  auto positions = [&] {
    for (int axis : layout.position_axes) {
      out << ' ' << kAxisNames[axis] << "position";
    }
  };
  auto rotations = [&] {
    if (layout.rotation) {
      for (int k = 0; k < 3; ++k) {
        out << ' ' << kAxisNames[layout.rotation->axis(k)] << "rotation";
      }
    }
  };
  if (layout.positions_first) {
    positions();
    rotations();
  } else {
    rotations();
    positions();
  }
  out << "\n";
  for (std::size_t child : children[i]) {
    write_joint(out, skeleton, children, child, depth + 1);
  }
  if (joint.end_site) {
    out << indent << "\tEnd Site\n" << indent << "\t{\n";
    out << indent << "\t\tOFFSET " << offset_text(joint.end_site->x()) << ' '
        << offset_text(joint.end_site->y()) << ' ' << offset_text(joint.end_site->z()) << "\n";
    out << indent << "\t}\n";
  }
  out << indent << "}\n";
}

}  // namespace

Document parse(std::string_view text) {
  Reader in(tokenize(text));
  in.expect("HIERARCHY");
  in.expect("ROOT");
  std::vector<Joint> joints;
  parse_joint(in, joints, std::nullopt);
  {
    const Token& t = in.next();
    if (t.text != "MOTION") {
      throw ParseError(t.line, "expected 'MOTION' after the hierarchy, found '" +
                                   std::string(t.text) + "'");
    }
  }
  in.expect("Frames:");
  const std::size_t declared = in.count();
  in.expect("Frame");
  in.expect("Time:");
  const Token& time_token = in.next();
  const double frame_time = Reader::to_double(time_token);
  if (!(frame_time > 0.0)) {
    throw ParseError(time_token.line, "frame time must be positive");
  }

  SkeletonPtr skeleton;
  try {
    skeleton = std::make_shared<const Skeleton>(std::move(joints));
  } catch (const Error& e) {
    throw ParseError(1, e.what());
  }
  std::vector<ChannelLayout> layouts;
  std::size_t per_frame = 0;
  for (std::size_t i = 0; i < skeleton->size(); ++i) {
    layouts.push_back(*skeleton->joint(i).channels);
    per_frame += layouts.back().channel_count();
  }

  // Group the remaining tokens by source line: one frame per line.
  std::vector<std::vector<Token>> rows;
  const auto& tokens = in.tokens();
  for (std::size_t k = in.position(); k < tokens.size(); ++k) {
    if (rows.empty() || rows.back().back().line != tokens[k].line) {
      rows.emplace_back();
    }
    rows.back().push_back(tokens[k]);
  }
  if (rows.size() != declared) {
    throw ParseError(rows.empty() ? time_token.line : rows.back().back().line,
                     "frame count mismatch: declared " + std::to_string(declared) + ", found " +
                         std::to_string(rows.size()));
  }

  MotionSequence motion;
  motion.skeleton = skeleton;
  motion.fps = snap_fps(1.0 / frame_time);
  motion.frames.reserve(rows.size());
  motion.root_translation.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != per_frame) {
      throw ParseError(row.front().line, "expected " + std::to_string(per_frame) +
                                             " channel values, found " +
                                             std::to_string(row.size()));
    }
    std::size_t c = 0;
    Pose pose;
    pose.rotations.reserve(skeleton->size());
    Vec3 root = Vec3::Zero();
    for (std::size_t j = 0; j < skeleton->size(); ++j) {
      const ChannelLayout& layout = layouts[j];
      Vec3 position = Vec3::Zero();
      Vec3 euler = Vec3::Zero();
      auto read_positions = [&] {
        for (int axis : layout.position_axes) {
          position[axis] = Reader::to_double(row[c++]);
        }
      };
      auto read_rotations = [&] {
        if (layout.rotation) {
          for (int k = 0; k < 3; ++k) {
            euler[k] = Reader::to_double(row[c++]);
          }
        }
      };
      if (layout.positions_first) {
        read_positions();
        read_rotations();
      } else {
        read_rotations();
        read_positions();
      }
      if (j == 0) {
        root = position;
      }
      pose.rotations.push_back(layout.rotation ? euler_to_quat(euler, *layout.rotation)
                                               : Quat::Identity());
    }
    motion.frames.push_back(std::move(pose));
    motion.root_translation.push_back(root);
  }
  if (motion.frames.empty()) {
    throw ParseError(time_token.line, "document holds no frames");
  }
  return Document{skeleton, std::move(motion)};
}

std::string write(const Skeleton& skeleton, const MotionSequence& motion) {
  require(motion.skeleton && motion.skeleton->same_rig(skeleton), ErrorKind::Data,
          "motion does not reference the given skeleton");
  motion.validate();

  std::vector<std::vector<std::size_t>> children(skeleton.size());
  for (std::size_t i = 1; i < skeleton.size(); ++i) {
    children[static_cast<std::size_t>(*skeleton.joint(i).parent)].push_back(i);
  }

  std::ostringstream out;
  out << "HIERARCHY\n";
  write_joint(out, skeleton, children, 0, 0);
  out << "MOTION\n";
  out << "Frames: " << motion.frame_count() << "\n";
  out << "Frame Time: " << shortest(1.0 / motion.fps) << "\n";

  std::vector<ChannelLayout> layouts;
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    layouts.push_back(effective_layout(skeleton, i));
  }
  // Channel values follow the hierarchy's depth-first order, which need not be index order.
  std::vector<std::size_t> order;
  std::vector<std::size_t> pending{0};
  while (!pending.empty()) {
    const std::size_t j = pending.back();
    pending.pop_back();
    order.push_back(j);
    pending.insert(pending.end(), children[j].rbegin(), children[j].rend());
  }
  for (std::size_t f = 0; f < motion.frame_count(); ++f) {
    bool first = true;
    auto emit = [&](double v) {
      if (!first) {
        out << ' ';
      }
      out << fixed6(v);
      first = false;
    };
    for (std::size_t j : order) {
      const ChannelLayout& layout = layouts[j];
      const Vec3 position = j == 0 ? motion.root_translation[f] : skeleton.joint(j).offset;
      auto positions = [&] {
        for (int axis : layout.position_axes) {
          emit(position[axis]);
        }
      };
      auto rotations = [&] {
        if (layout.rotation) {
          const Vec3 euler = quat_to_euler(motion.frames[f].rotations[j], *layout.rotation);
          for (int k = 0; k < 3; ++k) {
            emit(euler[k]);
          }
        }
      };
      if (layout.positions_first) {
        positions();
        rotations();
      } else {
        rotations();
        positions();
      }
    }
    out << "\n";
  }
  return out.str();
}

Document read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Data, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw Error(ErrorKind::Data, path.string() + ": " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const Skeleton& skeleton,
                const MotionSequence& motion) {
  const std::string text = write(skeleton, motion);
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Data, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace animgan::bvh
