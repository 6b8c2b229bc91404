import init, { interpolate, metricResiduals, entropyHistory } from "./pkg/dgsem_wasm.js";

const $ = (id) => document.getElementById(id);

// Draws polylines and point sets into a canvas with simple linear axes.
function plot(canvas, series, { logY = false, yLabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 48;
  ctx.clearRect(0, 0, w, h);
  const ty = (v) => (logY ? Math.log10(Math.max(v, 1e-18)) : v);
  let x0 = Infinity, x1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const s of series) {
    s.x.forEach((x, i) => {
      const y = ty(s.y[i]);
      if (!Number.isFinite(y)) return;
      x0 = Math.min(x0, x); x1 = Math.max(x1, x);
      y0 = Math.min(y0, y); y1 = Math.max(y1, y);
    });
  }
  if (x1 === x0) x1 = x0 + 1;
  if (y1 - y0 < 1e-300) { y0 -= 1; y1 += 1; }
  const m = 0.05 * (y1 - y0);
  y0 -= m; y1 += m;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad + ((y0 - y) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#aaa";
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  for (let k = 0; k <= 4; k++) {
    const y = y0 + (k / 4) * (y1 - y0);
    const label = logY ? `1e${y.toFixed(1)}` : y.toPrecision(3);
    ctx.fillText(label, 2, py(y) + 4);
    const x = x0 + (k / 4) * (x1 - x0);
    ctx.fillText(x.toPrecision(3), px(x) - 10, h - pad + 16);
  }
  ctx.fillText(yLabel, pad, pad - 8);

  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    ctx.lineWidth = 2;
    if (s.points) {
      s.x.forEach((x, i) => {
        ctx.beginPath();
        ctx.arc(px(x), py(ty(s.y[i])), 4, 0, 2 * Math.PI);
        ctx.fill();
      });
    } else {
      ctx.beginPath();
      s.x.forEach((x, i) => {
        const y = py(ty(s.y[i]));
        i === 0 ? ctx.moveTo(px(x), y) : ctx.lineTo(px(x), y);
      });
      ctx.stroke();
    }
  }
}

function showError(out, e) {
  out.textContent = `error: ${e.message ?? e}`;
}

function updateInterpolation() {
  const degree = Number($("interp-degree").value);
  $("interp-degree-value").textContent = degree;
  try {
    const r = interpolate(degree, $("interp-function").value, 401);
    plot($("interp-canvas"), [
      { x: r.x, y: r.exact, color: "#999" },
      { x: r.x, y: r.interpolant, color: "#c33" },
      { x: r.nodes, y: r.values, color: "#236", points: true },
    ]);
    $("interp-out").textContent = `max |f - I_N f| on the sample grid: ${r.max_error.toExponential(3)}`;
  } catch (e) {
    showError($("interp-out"), e);
  }
}

function runMetrics() {
  const degree = Number($("metric-degree").value);
  const elements = Number($("metric-elements").value);
  const amps = Array.from({ length: 11 }, (_, i) => 0.02 * i);
  const curl = [], cross = [];
  try {
    for (const a of amps) {
      const [c, x] = metricResiduals(a, degree, elements);
      curl.push(c);
      cross.push(x);
    }
    plot($("metric-canvas"), [
      { x: amps, y: cross, color: "#c33" },
      { x: amps, y: curl, color: "#236" },
    ], { logY: true, yLabel: "max |discrete divergence of Ja|" });
    const last = amps.length - 1;
    $("metric-out").textContent =
      `amplitude 0.2: curl ${curl[last].toExponential(2)}, cross product ${cross[last].toExponential(2)}`;
  } catch (e) {
    showError($("metric-out"), e);
  }
}

function runEntropy() {
  const amplitude = Number($("entropy-amplitude").value);
  const steps = Number($("entropy-steps").value);
  try {
    const none = entropyHistory("none", amplitude, steps);
    const llf = entropyHistory("llf", amplitude, steps);
    plot($("entropy-canvas"), [
      { x: none.time, y: none.entropy_change, color: "#236" },
      { x: llf.time, y: llf.entropy_change, color: "#c33" },
    ], { yLabel: "S(t) - S(0)" });
    const end = (h) => h.entropy_change[h.entropy_change.length - 1].toExponential(3);
    const maxRate = (h) => Math.max(...h.rate).toExponential(2);
    $("entropy-out").textContent =
      `final change: none ${end(none)}, llf ${end(llf)}; max dS/dt: none ${maxRate(none)}, llf ${maxRate(llf)}`;
  } catch (e) {
    showError($("entropy-out"), e);
  }
}

await init();
$("status").textContent = "Solver loaded. Everything below runs locally in WebAssembly.";
$("interp-degree").addEventListener("input", updateInterpolation);
$("interp-function").addEventListener("change", updateInterpolation);
$("metric-run").addEventListener("click", runMetrics);
$("entropy-amplitude").addEventListener("input", () => {
  $("entropy-amplitude-value").textContent = $("entropy-amplitude").value;
});
$("entropy-run").addEventListener("click", runEntropy);
updateInterpolation();
runMetrics();
runEntropy();
