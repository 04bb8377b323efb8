#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qpusim/errors.hpp"

// Pattern generator: 512-vector x 64-bit pattern memory, its script
// assembler, and the vector-stream executor on the divided clock.
//
// Script grammar (one instruction per line, '#' starts a comment):
//
//   Set<leaf>   <node>[,<node>...] [+<delay>]    drive nodes high
//   Rst<leaf>   <node>[,<node>...] [+<delay>]    drive nodes low
//   Pulse<leaf> <node>[,<node>...] [+<delay>]    pulse nodes via leaf cell
//   Amp   <code>            [+<delay>]           load 8-bit CDAC amplitude
//   Loop  <count> <target>                       repeat from vector <target>
//
// <leaf> is a pulse-select leaf cell 0..7; <delay> holds the bus state for
// that many extra CKDIV ticks (0..255); <target> is a 1-based vector index
// at or before the Loop vector itself.
//
// 64-bit word layout. Bits [63:48] are the data bus presented to the quantum
// core (bits [55:48] the amplitude word, bits [63:56] opaque control bits
// carrying kind and leaf); bits [47:0] are the control lines indexed by
// node_table. Loop and delay fields overlay unused regions per opcode:
//
//   [63:61] kind   [60:58] leaf   [57:56] reserved
//   Set/Rst/Pulse: [55:48] delay         [47:0]  target mask
//   Amplitude:     [55:48] code          [47:40] delay
//   Loop:          [47:32] count         [31:16] target (1-based)
//
// When executed, Amplitude vectors present ctrl_bus = 0 (the overlay bits
// never strobe control lines) and Loop vectors are consumed by the sequencer
// without emitting an event.
namespace qpusim::patgen {

inline constexpr int kMemoryDepth = 512;
inline constexpr int kWordBits = 64;
inline constexpr int kControlLines = 48;

enum class InstrKind : uint8_t { SetHigh = 0, SetLow = 1, Pulse = 2, Amplitude = 3, Loop = 4 };

inline const char* kind_mnemonic(InstrKind k) {
  switch (k) {
    case InstrKind::SetHigh: return "Set";
    case InstrKind::SetLow: return "Rst";
    case InstrKind::Pulse: return "Pulse";
    case InstrKind::Amplitude: return "Amp";
    case InstrKind::Loop: return "Loop";
  }
  return "?";
}

inline const char* kind_name(InstrKind k) {
  switch (k) {
    case InstrKind::SetHigh: return "SetHigh";
    case InstrKind::SetLow: return "SetLow";
    case InstrKind::Pulse: return "Pulse";
    case InstrKind::Amplitude: return "Amplitude";
    case InstrKind::Loop: return "Loop";
  }
  return "?";
}

struct Instruction {
  InstrKind kind = InstrKind::SetHigh;
  int leaf_cell = 0;                  // 0..7
  std::vector<std::string> targets;   // node names, nonempty for Set/Rst/Pulse
  int amplitude_code = 0;             // 0..255
  int loop_count = 1;                 // >= 1, <= 65535
  int loop_target = 0;                // 1-based vector index
  int delay_vectors = 0;              // extra CKDIV ticks, 0..255

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

// Node name -> bus bit. Control lines live in bits 0..47; names may also map
// into the opaque data-bus bits 56..63.
struct NodeTable {
  std::map<std::string, int> bits;

  // Fig. 2(b) topology defaults: 32 CDAC clock lines (IU1..IU16, ID1..ID16 on
  // bits 0..31) and 16 CDS/detector controls (DETn_S0/S1 on bits 32..47).
  static NodeTable defaults() {
    NodeTable t;
    for (int i = 0; i < 16; ++i) t.bits["IU" + std::to_string(i + 1)] = i;
    for (int i = 0; i < 16; ++i) t.bits["ID" + std::to_string(i + 1)] = 16 + i;
    for (int d = 0; d < 8; ++d) {
      t.bits["DET" + std::to_string(d) + "_S0"] = 32 + 2 * d;
      t.bits["DET" + std::to_string(d) + "_S1"] = 32 + 2 * d + 1;
    }
    return t;
  }

  int bit_of(const std::string& name) const {
    auto it = bits.find(name);
    if (it == bits.end()) throw ValidationError("unknown node name: " + name);
    return it->second;
  }

  std::optional<std::string> name_of(int bit) const {
    for (const auto& [n, b] : bits) {
      if (b == bit) return n;
    }
    return std::nullopt;
  }
};

struct PatternProgram {
  std::vector<Instruction> vectors;
  NodeTable node_table;
};

struct MemoryImage {
  std::array<uint64_t, kMemoryDepth> words{};
  int used_vectors = 0;

  int utilization_bits() const { return used_vectors * kWordBits; }
};

// Bus state on one CKDIV tick.
struct ControlEvent {
  uint64_t tick;
  uint16_t data_bus;  // word bits [63:48]
  uint64_t ctrl_bus;  // word bits [47:0]
};

inline InstrKind event_kind(const ControlEvent& ev) {
  return static_cast<InstrKind>((ev.data_bus >> 13) & 0x7);
}

inline int event_leaf(const ControlEvent& ev) { return (ev.data_bus >> 10) & 0x7; }

inline bool event_targets_bit(const ControlEvent& ev, int bit) {
  return bit >= 0 && bit < kControlLines && ((ev.ctrl_bus >> bit) & 1u) != 0;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline bool parse_int(const std::string& tok, long& out) {
  if (tok.empty()) return false;
  size_t pos = 0;
  try {
    out = std::stol(tok, &pos);
  } catch (...) {
    return false;
  }
  return pos == tok.size();
}

struct Token {
  std::string text;
  int column;  // 1-based
};

inline std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start + 1)});
  }
  return out;
}

}  // namespace detail

inline PatternProgram parse_script(const std::string& text,
                                   NodeTable node_table = NodeTable::defaults()) {
  PatternProgram prog;
  prog.node_table = node_table;

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = (eol == std::string::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;

    Instruction ins;
    const auto& mnem = toks[0];
    size_t arg = 1;

    auto take_delay = [&](size_t from) {
      if (from < toks.size() && toks[from].text.size() > 1 && toks[from].text[0] == '+') {
        long d;
        if (!detail::parse_int(toks[from].text.substr(1), d) || d < 0 || d > 255)
          throw ParseError(line_no, toks[from].column, "delay must be +0..+255");
        ins.delay_vectors = static_cast<int>(d);
        return from + 1;
      }
      return from;
    };

    auto parse_leaf_mnemonic = [&](const std::string& base, InstrKind kind) {
      if (mnem.text.size() != base.size() + 1 || mnem.text.compare(0, base.size(), base) != 0)
        return false;
      char c = mnem.text[base.size()];
      if (c < '0' || c > '7') throw ParseError(line_no, mnem.column, "leaf cell must be 0..7");
      ins.kind = kind;
      ins.leaf_cell = c - '0';
      return true;
    };

    if (parse_leaf_mnemonic("Set", InstrKind::SetHigh) ||
        parse_leaf_mnemonic("Rst", InstrKind::SetLow) ||
        parse_leaf_mnemonic("Pulse", InstrKind::Pulse)) {
      if (arg >= toks.size())
        throw ParseError(line_no, mnem.column, "expected node list after " + mnem.text);
      const auto& list = toks[arg];
      size_t b = 0;
      while (b <= list.text.size()) {
        size_t comma = list.text.find(',', b);
        std::string name = list.text.substr(b, comma == std::string::npos ? std::string::npos : comma - b);
        if (name.empty())
          throw ParseError(line_no, list.column + static_cast<int>(b), "empty node name");
        int bit;
        try {
          bit = node_table.bit_of(name);
        } catch (const ValidationError& e) {
          throw ParseError(line_no, list.column + static_cast<int>(b), e.what());
        }
        (void)bit;
        ins.targets.push_back(name);
        if (comma == std::string::npos) break;
        b = comma + 1;
      }
      arg = take_delay(arg + 1);
    } else if (mnem.text == "Amp") {
      ins.kind = InstrKind::Amplitude;
      long code;
      if (arg >= toks.size() || !detail::parse_int(toks[arg].text, code) || code < 0 || code > 255)
        throw ParseError(line_no, arg < toks.size() ? toks[arg].column : mnem.column,
                         "Amp expects a code 0..255");
      ins.amplitude_code = static_cast<int>(code);
      arg = take_delay(arg + 1);
    } else if (mnem.text == "Loop") {
      ins.kind = InstrKind::Loop;
      long count, target;
      if (arg + 1 >= toks.size() || !detail::parse_int(toks[arg].text, count) ||
          !detail::parse_int(toks[arg + 1].text, target))
        throw ParseError(line_no, mnem.column, "Loop expects <count> <target>");
      if (count < 1 || count > 65535)
        throw ParseError(line_no, toks[arg].column, "loop count must be 1..65535");
      if (target < 1 || target > static_cast<long>(prog.vectors.size()))
        throw ParseError(line_no, toks[arg + 1].column,
                         "loop target beyond current vector");
      ins.loop_count = static_cast<int>(count);
      ins.loop_target = static_cast<int>(target);
      arg += 2;
    } else {
      throw ParseError(line_no, mnem.column, "unknown instruction keyword: " + mnem.text);
    }

    if (arg < toks.size())
      throw ParseError(line_no, toks[arg].column, "unexpected token: " + toks[arg].text);

    prog.vectors.push_back(std::move(ins));
    if (prog.vectors.size() > kMemoryDepth)
      throw ParseError(line_no, 1, "program exceeds 512 vectors");
  }
  return prog;
}

// ---------------------------------------------------------------------------
// Assembly

inline uint64_t encode_instruction(const Instruction& ins, const NodeTable& table) {
  uint64_t w = (static_cast<uint64_t>(ins.kind) & 0x7) << 61;
  w |= (static_cast<uint64_t>(ins.leaf_cell) & 0x7) << 58;
  switch (ins.kind) {
    case InstrKind::SetHigh:
    case InstrKind::SetLow:
    case InstrKind::Pulse: {
      w |= (static_cast<uint64_t>(ins.delay_vectors) & 0xff) << 48;
      for (const auto& name : ins.targets) {
        int bit = table.bit_of(name);
        w |= 1ull << bit;
      }
      break;
    }
    case InstrKind::Amplitude:
      w |= (static_cast<uint64_t>(ins.amplitude_code) & 0xff) << 48;
      w |= (static_cast<uint64_t>(ins.delay_vectors) & 0xff) << 40;
      break;
    case InstrKind::Loop:
      w |= (static_cast<uint64_t>(ins.loop_count) & 0xffff) << 32;
      w |= (static_cast<uint64_t>(ins.loop_target) & 0xffff) << 16;
      break;
  }
  return w;
}

inline MemoryImage assemble(const PatternProgram& prog) {
  if (prog.vectors.size() > kMemoryDepth)
    throw ValidationError("program exceeds 512 vectors");
  MemoryImage img;
  img.used_vectors = static_cast<int>(prog.vectors.size());
  for (size_t i = 0; i < prog.vectors.size(); ++i) {
    const auto& ins = prog.vectors[i];
    if (ins.kind != InstrKind::Amplitude && ins.kind != InstrKind::Loop && ins.targets.empty())
      throw ValidationError("vector " + std::to_string(i + 1) + ": Set/Rst/Pulse needs targets");
    img.words[i] = encode_instruction(ins, prog.node_table);
  }
  return img;
}

inline Instruction decode_word(uint64_t w, const NodeTable& table) {
  Instruction ins;
  ins.kind = static_cast<InstrKind>((w >> 61) & 0x7);
  ins.leaf_cell = static_cast<int>((w >> 58) & 0x7);
  switch (ins.kind) {
    case InstrKind::SetHigh:
    case InstrKind::SetLow:
    case InstrKind::Pulse: {
      ins.delay_vectors = static_cast<int>((w >> 48) & 0xff);
      for (int bit = 0; bit < kControlLines; ++bit) {
        if ((w >> bit) & 1u) {
          auto name = table.name_of(bit);
          if (!name) throw ValidationError("control bit " + std::to_string(bit) + " has no node name");
          ins.targets.push_back(*name);
        }
      }
      break;
    }
    case InstrKind::Amplitude:
      ins.amplitude_code = static_cast<int>((w >> 48) & 0xff);
      ins.delay_vectors = static_cast<int>((w >> 40) & 0xff);
      break;
    case InstrKind::Loop:
      ins.loop_count = static_cast<int>((w >> 32) & 0xffff);
      ins.loop_target = static_cast<int>((w >> 16) & 0xffff);
      break;
    default:
      throw ValidationError("invalid opcode in word");
  }
  return ins;
}

// Inverse of assemble(): unused (zero) words terminate the program. A valid
// encoded vector is never all-zero (Set/Rst/Pulse carry a target mask, Amp
// and Loop carry nonzero opcode bits).
inline PatternProgram decode(const MemoryImage& img,
                             NodeTable node_table = NodeTable::defaults()) {
  PatternProgram prog;
  prog.node_table = node_table;
  for (int i = 0; i < kMemoryDepth; ++i) {
    if (img.words[i] == 0) break;
    prog.vectors.push_back(decode_word(img.words[i], node_table));
  }
  // Targets decode in bit order; normalize only ordering, names are exact.
  return prog;
}

inline void write_image(const MemoryImage& img, std::ostream& os) {
  for (uint64_t w : img.words) {
    for (int b = 0; b < 8; ++b) os.put(static_cast<char>((w >> (8 * b)) & 0xff));
  }
}

inline MemoryImage read_image(std::istream& is) {
  MemoryImage img;
  img.used_vectors = 0;
  for (int i = 0; i < kMemoryDepth; ++i) {
    uint64_t w = 0;
    for (int b = 0; b < 8; ++b) {
      int c = is.get();
      if (c < 0) throw ValidationError("memory image truncated (expected 4096 bytes)");
      w |= static_cast<uint64_t>(static_cast<unsigned char>(c)) << (8 * b);
    }
    img.words[i] = w;
    if (w != 0) img.used_vectors = i + 1;
  }
  return img;
}

// ---------------------------------------------------------------------------
// Execution

namespace detail {

struct LoopSpan {
  int loop_index;   // 0-based vector index of the Loop instruction
  int body_begin;   // 0-based first body vector
};

// Loops must be properly nested (laminar) and at most 4 deep.
inline void validate_nesting(const PatternProgram& prog) {
  std::vector<LoopSpan> loops;
  for (size_t i = 0; i < prog.vectors.size(); ++i) {
    const auto& ins = prog.vectors[i];
    if (ins.kind == InstrKind::Loop)
      loops.push_back({static_cast<int>(i), ins.loop_target - 1});
  }
  for (const auto& inner : loops) {
    int depth = 1;
    for (const auto& outer : loops) {
      if (outer.loop_index == inner.loop_index) continue;
      bool inner_inside = inner.loop_index >= outer.body_begin && inner.loop_index < outer.loop_index;
      if (inner_inside) {
        if (inner.body_begin < outer.body_begin)
          throw ValidationError("malformed nesting: loop at vector " +
                                std::to_string(inner.loop_index + 1) +
                                " targets outside the enclosing loop body");
        ++depth;
      }
    }
    if (depth > 4)
      throw ValidationError("loop nesting exceeds depth 4 at vector " +
                            std::to_string(inner.loop_index + 1));
  }
}

}  // namespace detail

// Runs the vector stream. Each non-Loop vector occupies 1 + delay_vectors
// CKDIV ticks and emits one ControlEvent. A Loop vector consumes one tick
// whenever its iteration counter initializes (entry or re-entry from an
// enclosing loop); rewinds are otherwise zero-overhead and emit no event.
inline std::vector<ControlEvent> execute(const PatternProgram& prog, uint64_t max_ticks) {
  detail::validate_nesting(prog);

  std::vector<uint64_t> words(prog.vectors.size());
  for (size_t i = 0; i < prog.vectors.size(); ++i)
    words[i] = encode_instruction(prog.vectors[i], prog.node_table);

  std::vector<ControlEvent> events;
  std::vector<int> remaining(prog.vectors.size(), -1);  // -1: counter uninitialized
  uint64_t tick = 0;
  size_t pc = 0;
  while (pc < prog.vectors.size()) {
    const auto& ins = prog.vectors[pc];
    if (ins.kind == InstrKind::Loop) {
      if (remaining[pc] < 0) {
        if (++tick > max_ticks) throw ValidationError("tick budget exceeded");
        remaining[pc] = ins.loop_count - 1;  // one pass already ran linearly
      }
      if (remaining[pc] > 0) {
        --remaining[pc];
        pc = static_cast<size_t>(ins.loop_target - 1);
      } else {
        remaining[pc] = -1;  // re-arm for any enclosing loop
        ++pc;
      }
      continue;
    }
    uint64_t w = words[pc];
    uint16_t data = static_cast<uint16_t>(w >> 48);
    uint64_t ctrl =
        ins.kind == InstrKind::Amplitude ? 0 : (w & 0x0000ffffffffffffull);
    events.push_back({tick, data, ctrl});
    tick += 1 + static_cast<uint64_t>(ins.delay_vectors);
    if (tick > max_ticks) throw ValidationError("tick budget exceeded");
    ++pc;
  }
  return events;
}

}  // namespace qpusim::patgen
