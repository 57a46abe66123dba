// Built by `wasm-bindgen --target web --out-dir www/pkg`, see the README.
import init, { supersample_dataset, estimate_ids, sweep_k1 } from "./pkg/mess_demo.js";

const $ = (id) => document.getElementById(id);
const out = $("out");
const W = 340, H = 300;

function params() {
  return {
    dataset: $("dataset").value,
    n: Math.max(20, parseInt($("n").value, 10) || 0),
    noise: Math.max(0, parseFloat($("noise").value) || 0),
    seed: Math.max(0, parseInt($("seed").value, 10) || 0),
    k1: parseInt($("k1").value, 10) || 0,
    ext: parseInt($("ext").value, 10) || 0,
    corr: $("corr").value,
    estimator: $("estimator").value,
    grid: $("grid").value.split(",").map((s) => parseInt(s.trim(), 10)).filter((k) => k > 0),
  };
}

function status(text, error = false) {
  $("status").textContent = text;
  $("status").className = error ? "error" : "";
}

// Two display axes: x against z for 3-d sets (the roll's cross-section),
// the first two coordinates otherwise.
function axes(dim) {
  return dim >= 3 ? [0, 2] : [0, 1];
}

function bounds(flat, dim, [a, b]) {
  let lo = [Infinity, Infinity], hi = [-Infinity, -Infinity];
  for (let i = 0; i < flat.length; i += dim) {
    lo[0] = Math.min(lo[0], flat[i + a]); hi[0] = Math.max(hi[0], flat[i + a]);
    lo[1] = Math.min(lo[1], flat[i + b]); hi[1] = Math.max(hi[1], flat[i + b]);
  }
  return { lo, hi };
}

function panel(title) {
  const div = document.createElement("div");
  div.className = "panel";
  const h = document.createElement("h4");
  h.textContent = title;
  const c = document.createElement("canvas");
  c.width = W; c.height = H;
  div.append(h, c);
  out.append(div);
  return c.getContext("2d");
}

// viridis-like ramp on [0, 1]
function ramp(t) {
  const stops = [[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]];
  t = Math.min(1, Math.max(0, t)) * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(t)), f = t - i;
  const c = stops[i].map((v, j) => Math.round(v + f * (stops[i + 1][j] - v)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

function scatter(ctx, flat, dim, box, ax, color, size = 2, values = null, range = null) {
  const [a, b] = ax;
  const sx = (W - 20) / (box.hi[0] - box.lo[0] || 1), sy = (H - 20) / (box.hi[1] - box.lo[1] || 1);
  const s = Math.min(sx, sy);
  ctx.fillStyle = color;
  for (let i = 0, p = 0; i < flat.length; i += dim, p++) {
    if (values) {
      const v = values[p];
      ctx.fillStyle = Number.isFinite(v) ? ramp((v - range[0]) / (range[1] - range[0] || 1)) : "#bbb";
    }
    const x = 10 + (flat[i + a] - box.lo[0]) * s;
    const y = H - 10 - (flat[i + b] - box.lo[1]) * s;
    ctx.fillRect(x - size / 2, y - size / 2, size, size);
  }
}

function stats(text) {
  const p = document.createElement("p");
  p.className = "stats";
  p.textContent = text;
  out.append(p);
}

function median(values) {
  const v = Array.from(values).filter(Number.isFinite).sort((x, y) => x - y);
  if (!v.length) return NaN;
  const h = (v.length - 1) / 2;
  return v[Math.floor(h)] + (h - Math.floor(h)) * (v[Math.ceil(h)] - v[Math.floor(h)]);
}

function histogram(ctx, series, bins = 30) {
  const all = series.flatMap((s) => Array.from(s.values).filter(Number.isFinite));
  const lo = Math.min(...all), hi = Math.max(...all);
  const width = (hi - lo) / bins || 1;
  const counts = series.map((s) => {
    const c = new Array(bins).fill(0);
    for (const v of s.values) if (Number.isFinite(v)) c[Math.min(bins - 1, Math.floor((v - lo) / width))]++;
    return c;
  });
  const top = Math.max(...counts.flat(), 1);
  const bw = (W - 20) / bins;
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    counts[k].forEach((c, i) => {
      const y = H - 20 - (c / top) * (H - 40);
      if (i === 0) ctx.moveTo(10, y); else ctx.lineTo(10 + i * bw, y);
      ctx.lineTo(10 + (i + 1) * bw, y);
    });
    ctx.stroke();
    const m = median(s.values);
    const x = 10 + ((m - lo) / (hi - lo || 1)) * (W - 20);
    ctx.setLineDash([4, 3]);
    ctx.beginPath(); ctx.moveTo(x, 20); ctx.lineTo(x, H - 20); ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = s.color;
    ctx.fillText(`${s.label} (median ${m.toFixed(2)})`, 14, 14 + 14 * k);
  });
  ctx.fillStyle = "#444";
  ctx.fillText(lo.toFixed(2), 10, H - 5);
  ctx.fillText(hi.toFixed(2), W - 40, H - 5);
}

function lineChart(ctx, xs, ys, color, label) {
  const lo = Math.min(...ys), hi = Math.max(...ys);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const px = (x) => 30 + ((x - x0) / (x1 - x0 || 1)) * (W - 50);
  const py = (y) => H - 25 - ((y - lo) / (hi - lo || 1)) * (H - 50);
  ctx.strokeStyle = color; ctx.fillStyle = color; ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
  ctx.stroke();
  xs.forEach((x, i) => {
    ctx.fillRect(px(x) - 3, py(ys[i]) - 3, 6, 6);
    ctx.fillText(String(x), px(x) - 6, H - 8);
  });
  ctx.fillText(`${label}: ${lo.toFixed(3)} … ${hi.toFixed(3)}`, 30, 14);
}

function runSupersample(p) {
  const r = supersample_dataset(p.dataset, p.n, p.noise, p.k1, p.ext, p.corr, p.seed);
  const dim = r.dim, ax = axes(dim);
  const original = r.original(), raw = r.raw(), corrected = r.corrected();
  const box = bounds(raw, dim, ax);
  scatter(panel("original"), original, dim, box, ax, "#1f77b4", 3);
  scatter(panel("raw samples"), raw, dim, box, ax, "#ff7f0e", 1.5);
  scatter(panel(`corrected samples (${p.corr})`), corrected, dim, box, ax, "#2ca02c", 1.5);
  if (Number.isFinite(r.residualRaw)) {
    stats(`mean distance to the manifold: raw ${r.residualRaw.toFixed(4)}, corrected ${r.residualCorrected.toFixed(4)}`);
  }
  r.free();
}

function runEstimate(p) {
  const r = estimate_ids(p.dataset, p.n, p.noise, p.k1, p.ext, p.estimator, p.seed);
  const dim = r.dim, ax = axes(dim);
  const pts = r.points(), without = r.without(), withMess = r.with();
  const finite = [...without, ...withMess].filter(Number.isFinite).sort((a, b) => a - b);
  const range = [finite[Math.floor(0.02 * finite.length)], finite[Math.floor(0.98 * (finite.length - 1))]];
  const box = bounds(pts, dim, ax);
  scatter(panel(`${p.estimator} without supersampling`), pts, dim, box, ax, null, 4, without, range);
  scatter(panel(`${p.estimator} with supersampling`), pts, dim, box, ax, null, 4, withMess, range);
  histogram(panel("estimates"), [
    { label: "without", color: "#1f77b4", values: without },
    { label: "with", color: "#2ca02c", values: withMess },
  ]);
  stats(`median without ${r.medianWithout.toFixed(3)}, with ${r.medianWith.toFixed(3)}; color range ${range[0].toFixed(2)} … ${range[1].toFixed(2)}`);
  r.free();
}

function runSweep(p) {
  const r = sweep_k1(p.dataset, p.n, p.noise, new Uint32Array(p.grid), p.ext, p.estimator, p.seed);
  const k1 = Array.from(r.k1()), med = Array.from(r.median()), dev = Array.from(r.deviation());
  lineChart(panel("median estimate vs k1"), k1, med, "#1f77b4", "median");
  lineChart(panel("mean local deviation vs k1"), k1, dev, "#d62728", "deviation");
  stats(`lowest mean local deviation at k1 = ${k1[r.best]} (median ${med[r.best].toFixed(3)})`);
  r.free();
}

function bind(id, f) {
  $(id).addEventListener("click", () => {
    out.replaceChildren();
    status("running…");
    // let the status paint before the (blocking) computation
    setTimeout(() => {
      const t = performance.now();
      try {
        f(params());
        status(`done in ${((performance.now() - t) / 1000).toFixed(2)} s`);
      } catch (e) {
        status(String(e.message ?? e), true);
      }
    }, 20);
  });
}

await init();
bind("run-supersample", runSupersample);
bind("run-estimate", runEstimate);
bind("run-sweep", runSweep);
for (const id of ["run-supersample", "run-estimate", "run-sweep"]) $(id).disabled = false;
status("ready");
