import init, { decompose, reproduce, whitney } from "./pkg/tbkit_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guard(outId, f) {
  const out = $(outId);
  try {
    out.classList.remove("err");
    f(out);
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function runDecompose() {
  guard("dec-out", (out) => {
    const v = JSON.parse(decompose($("dec-system").value, num("dec-slots"), num("dec-depth")));
    const c = $("dec-canvas");
    const g = c.getContext("2d");
    const W = c.width, H = c.height, pad = 20;
    const X = (x) => pad + x * (W - 2 * pad);
    g.clearRect(0, 0, W, H);
    g.fillStyle = "#f4c7a1";
    for (const s of v.selected) g.fillRect(X(s.lo), 10, X(s.hi) - X(s.lo), H - 40);
    // slot values on [-1.5, 1.5]
    const Y = (y) => (H - 30) / 2 + 10 - y * (H - 40) / 3;
    g.strokeStyle = "#999";
    g.beginPath(); g.moveTo(X(0), Y(0)); g.lineTo(X(1), Y(0)); g.stroke();
    const colours = ["#1f5fa8", "#2e8b57"];
    v.profile.forEach((slot, i) => {
      g.strokeStyle = colours[i % 2];
      g.beginPath();
      slot.forEach((y, k) => {
        const x = X((k + 0.5) / slot.length);
        k ? g.lineTo(x, Y(y)) : g.moveTo(x, Y(y));
      });
      g.stroke();
    });
    g.fillStyle = "#222";
    g.fillText("0", X(0) - 3, H - 8);
    g.fillText("1", X(1) - 3, H - 8);
    out.textContent =
      `selected cubes: ${v.selected.length}\n` +
      `|E| / |Q|: ${v.exceptional_fraction.toFixed(4)}\n` +
      `unresolved floor leaves: ${v.unresolved_leaves}`;
  });
}

function runReproduce() {
  guard("rep-out", (out) => {
    const v = JSON.parse(reproduce(num("rep-width"), num("rep-lo"), num("rep-hi"), num("rep-k")));
    const c = $("rep-canvas");
    const g = c.getContext("2d");
    const W = c.width, H = c.height;
    const x0 = -8, x1 = 8;
    const X = (x) => ((x - x0) / (x1 - x0)) * W;
    const Y = (y) => H - 20 - y * (H - 40);
    g.clearRect(0, 0, W, H);
    const curve = (ys, colour) => {
      g.strokeStyle = colour;
      g.beginPath();
      let started = false;
      v.x.forEach((x, k) => {
        if (x < x0 || x > x1) return;
        started ? g.lineTo(X(x), Y(ys[k])) : g.moveTo(X(x), Y(ys[k]));
        started = true;
      });
      g.stroke();
    };
    curve(v.f, "#999");
    curve(v.reproduced, "#c0392b");
    out.textContent = `scales: ${v.scales}\nrelative L2 error: ${v.relative_error.toExponential(3)}`;
  });
}

function runWhitney() {
  guard("wh-out", (out) => {
    const cx = num("wh-cx"), cy = num("wh-cy"), r = num("wh-r");
    const v = JSON.parse(whitney(cx, cy, r, num("wh-res")));
    const c = $("wh-canvas");
    const g = c.getContext("2d");
    const S = c.width / 4;
    const X = (x) => (x + 2) * S;
    const Y = (y) => c.height - (y + 2) * S;
    g.clearRect(0, 0, c.width, c.height);
    g.strokeStyle = "#1f5fa8";
    for (const q of v.squares) g.strokeRect(X(q.x), Y(q.y + q.side), q.side * S, q.side * S);
    g.strokeStyle = "#c0392b";
    g.beginPath(); g.arc(X(cx), Y(cy), r * S, 0, 2 * Math.PI); g.stroke();
    const k = v.check;
    out.textContent =
      `squares: ${k.cube_count}   properties hold: ${v.passes}\n` +
      `dist/diam in [${k.min_distance_ratio.toFixed(2)}, ${k.max_distance_ratio.toFixed(2)}]   ` +
      `neighbour side ratio <= ${k.max_neighbor_ratio}   touching <= ${k.max_touching}\n` +
      `covered ${k.covered_volume.toFixed(4)} of ${k.set_volume.toFixed(4)}`;
  });
}

await init();
$("dec-run").onclick = runDecompose;
$("rep-run").onclick = runReproduce;
$("wh-run").onclick = runWhitney;
runDecompose();
runReproduce();
runWhitney();
