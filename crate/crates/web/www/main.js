import init, { Model, wavefunction, overlap_scan, gram_deviation_map } from "./pkg/lsl_web.js";

const $ = (id) => document.getElementById(id);

function model() {
  return new Model(2.0, Number($("half").value), Number($("lambda").value),
    Number($("beta").value), $("profile").value === "g");
}

function frame(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#bbb";
  ctx.strokeRect(40.5, 10.5, w - 50, h - 40);
}

function plotLines(canvas, xs, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  frame(ctx, w, h);
  const all = series.flatMap((s) => s.ys).filter(Number.isFinite);
  let lo = Math.min(...all), hi = Math.max(...all);
  if (hi === lo) { hi += 1; lo -= 1; }
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const px = (x) => 40 + ((x - x0) / (x1 - x0 || 1)) * (w - 50);
  const py = (y) => 10 + (1 - (y - lo) / (hi - lo)) * (h - 40);
  ctx.font = "11px monospace";
  ctx.fillStyle = "#555";
  ctx.fillText(opts.fmt ? opts.fmt(hi) : hi.toPrecision(3), 2, 18);
  ctx.fillText(opts.fmt ? opts.fmt(lo) : lo.toPrecision(3), 2, h - 32);
  ctx.fillText(opts.xfmt ? opts.xfmt(x0) : x0.toFixed(2), 40, h - 14);
  ctx.fillText(opts.xfmt ? opts.xfmt(x1) : x1.toFixed(2), w - 60, h - 14);
  if (lo < 0 && hi > 0) {
    ctx.strokeStyle = "#eee";
    ctx.beginPath(); ctx.moveTo(40, py(0)); ctx.lineTo(w - 10, py(0)); ctx.stroke();
  }
  series.forEach((s, si) => {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    ctx.beginPath();
    xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.ys[i])) : ctx.moveTo(px(x), py(s.ys[i]))));
    ctx.stroke();
    xs.forEach((x, i) => ctx.fillRect(px(x) - 1.5, py(s.ys[i]) - 1.5, 3, 3));
    ctx.fillText(s.label, w - 180, 24 + 14 * si);
  });
}

function showError(el, e) {
  el.innerHTML = `<span class="err">${e.message ?? e}</span>`;
}

function drawWave() {
  const m = model();
  const n = m.size();
  $("incident").max = n - 1;
  const k = Math.min(Number($("incident").value), n - 1);
  const eps = 10 ** Number($("log-eps").value);
  $("lambda-v").textContent = Number($("lambda").value).toFixed(2);
  $("log-eps-v").textContent = eps.toExponential(1);
  try {
    const w = wavefunction(m, eps, k);
    const ks = Array.from(w.momenta());
    $("incident-v").textContent = `${k} (k = ${ks[k].toFixed(4)})`;
    plotLines($("wave"), ks, [
      { ys: Array.from(w.psi_re()), color: "#1f5fbf", label: "Re ψ" },
      { ys: Array.from(w.psi_im()), color: "#d0452f", label: "Im ψ" },
      { ys: Array.from(w.t_re()), color: "#6a9f3a", label: "Re T(k, k_in)" },
    ]);
    $("wave-out").textContent =
      `Δ(E) = ${w.fredholm_re().toExponential(6)} ${w.fredholm_im() >= 0 ? "+" : "-"} ${Math.abs(w.fredholm_im()).toExponential(6)}i    ‖ψ‖ = ${w.norm().toFixed(12)}`;
    w.free();
  } catch (e) {
    showError($("wave-out"), e);
  }
  m.free();
}

function drawScan() {
  const m = model();
  const n = m.size();
  const i = Math.min(Number($("incident").value), n - 1);
  const pts = 25;
  try {
    const mirror = overlap_scan(m, i, n - 1 - i, 1, 1e-7, pts);
    const next = overlap_scan(m, i, Math.min(i + 1, n - 1), 1, 1e-7, pts);
    const xs = [], a = [], b = [];
    for (let p = 0; p < pts; p++) {
      xs.push(Math.log10(mirror[4 * p]));
      a.push(Math.log10(Math.max(mirror[4 * p + 3], 1e-300)));
      b.push(Math.log10(Math.max(next[4 * p + 3], 1e-300)));
    }
    plotLines($("scan"), xs, [
      { ys: a, color: "#1f5fbf", label: "mirror pair" },
      { ys: b, color: "#d0452f", label: "neighbour pair" },
    ], { fmt: (y) => `1e${y.toFixed(1)}`, xfmt: (x) => `ε=1e${x.toFixed(0)}` });
    const last = 4 * (pts - 1);
    $("scan-out").textContent =
      `ε = 1e-7: mirror I = ${mirror[last + 1].toExponential(6)} ${mirror[last + 2] >= 0 ? "+" : "-"} ${Math.abs(mirror[last + 2]).toExponential(3)}i, neighbour |I| = ${next[last + 3].toExponential(3)}`;
  } catch (e) {
    showError($("scan-out"), e);
  }
  m.free();
}

function heat(t) {
  const r = Math.round(255 * Math.min(1, 1.5 * t));
  const g = Math.round(255 * Math.max(0, Math.min(1, 1.5 * t - 0.5)));
  const b = Math.round(120 * (1 - t));
  return `rgb(${r},${g},${b})`;
}

function drawMap() {
  const half = Math.min(Number($("half").value), 16);
  const m = new Model(2.0, half, 0, Number($("beta").value), $("profile").value === "g");
  const nl = 21, ne = 13, lmax = 1.0;
  const t0 = performance.now();
  try {
    const map = gram_deviation_map(m, lmax, nl, 1, 1e-6, ne);
    const canvas = $("map");
    const ctx = canvas.getContext("2d");
    const { width: w, height: h } = canvas;
    ctx.clearRect(0, 0, w, h);
    const cw = w / nl, ch = h / ne;
    const vmax = Math.max(...map);
    for (let li = 0; li < nl; li++) {
      for (let ei = 0; ei < ne; ei++) {
        ctx.fillStyle = heat(map[li * ne + ei] / (vmax || 1));
        ctx.fillRect(li * cw, ei * ch, Math.ceil(cw), Math.ceil(ch));
      }
    }
    $("map-out").textContent =
      `N = ${2 * half}, λ ∈ [-${lmax}, ${lmax}], max deviation ${vmax.toFixed(4)}, ${nl * ne} Gram matrices in ${(performance.now() - t0).toFixed(0)} ms`;
  } catch (e) {
    showError($("map-out"), e);
  }
  m.free();
}

await init();
const redraw = () => { drawWave(); drawScan(); };
["half", "lambda", "beta", "profile", "incident", "log-eps"].forEach((id) => $(id).addEventListener("input", redraw));
$("map-go").addEventListener("click", drawMap);
redraw();
drawMap();
