import init, { amAm, cancellationSeries, throughputCdf } from "./pkg/fdsim_demo.js";

const $ = (id) => document.getElementById(id);

// Minimal line plot. series: [{xs, ys, color, label, step}]
function plot(canvas, series, xlabel, ylabel) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, m = { l: 60, r: 15, t: 15, b: 40 };
  ctx.clearRect(0, 0, W, H);
  const all = (k) => series.flatMap((s) => s[k]).filter(Number.isFinite);
  let [x0, x1] = [Math.min(...all("xs")), Math.max(...all("xs"))];
  let [y0, y1] = [Math.min(...all("ys")), Math.max(...all("ys"))];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const pad = 0.05 * (y1 - y0); y0 -= pad; y1 += pad;
  const X = (x) => m.l + ((x - x0) / (x1 - x0)) * (W - m.l - m.r);
  const Y = (y) => H - m.b - ((y - y0) / (y1 - y0)) * (H - m.t - m.b);

  ctx.strokeStyle = "#999"; ctx.fillStyle = "#444"; ctx.font = "11px sans-serif";
  ctx.beginPath(); ctx.moveTo(m.l, m.t); ctx.lineTo(m.l, H - m.b); ctx.lineTo(W - m.r, H - m.b); ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const xv = x0 + (i / 4) * (x1 - x0), yv = y0 + (i / 4) * (y1 - y0);
    ctx.fillText(fmt(xv), X(xv) - 12, H - m.b + 14);
    ctx.fillText(fmt(yv), 4, Y(yv) + 4);
  }
  ctx.fillText(xlabel, W / 2 - 30, H - 6);
  ctx.save(); ctx.translate(12, H / 2 + 30); ctx.rotate(-Math.PI / 2); ctx.fillText(ylabel, 0, 0); ctx.restore();

  series.forEach((s, k) => {
    ctx.strokeStyle = s.color; ctx.lineWidth = 2; ctx.beginPath();
    s.xs.forEach((x, i) => {
      const px = X(x), py = Y(s.ys[i]);
      if (i === 0) ctx.moveTo(px, py);
      else if (s.step) { ctx.lineTo(px, Y(s.ys[i - 1])); ctx.lineTo(px, py); }
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.fillStyle = s.color; ctx.fillText(s.label, m.l + 10, m.t + 12 + 14 * k);
  });
}

const fmt = (v) => (Math.abs(v) >= 1000 ? v.toExponential(1) : v.toFixed(Math.abs(v) < 10 ? 2 : 1));

function guarded(outId, f) {
  return () => {
    const out = $(outId);
    out.classList.remove("err");
    try { f(out); } catch (e) { out.textContent = String(e.message ?? e); out.classList.add("err"); }
  };
}

const runAm = guarded("am-out", (out) => {
  const n = 60, v = amAm(+$("am-max").value, n, +$("am-k").value);
  const amp = Array.from(v.slice(0, n)), raw = Array.from(v.slice(n, 2 * n)), cal = Array.from(v.slice(2 * n));
  plot($("am-plot"), [
    { xs: amp, ys: amp, color: "#bbb", label: "ideal" },
    { xs: amp, ys: raw, color: "#d62728", label: "PA only" },
    { xs: amp, ys: cal, color: "#1f77b4", label: "pre-calibrated" },
  ], "input amplitude", "output / gain");
  const worst = (ys) => Math.max(...ys.map((y, i) => Math.abs(y - amp[i])));
  out.textContent = `max deviation from linear: ${worst(raw).toFixed(4)} uncalibrated, ${worst(cal).toFixed(4)} pre-calibrated`;
});

const runLink = guarded("lk-out", (out) => {
  const t = performance.now();
  const s = Array.from(cancellationSeries($("lk-c").value, +$("lk-v").value, +$("lk-s").value, +$("lk-n").value));
  const ms = performance.now() - t;
  plot($("lk-plot"), [{ xs: s.map((_, i) => i + 1), ys: s, color: "#2ca02c", label: $("lk-c").value }],
    "subframe (after warm-up frame)", "cancellation, dB");
  const mean = s.reduce((a, b) => a + b, 0) / s.length;
  out.textContent = `${s.length} subframes, mean ${mean.toFixed(2)} dB, min ${Math.min(...s).toFixed(2)} dB (${ms.toFixed(0)} ms)`;
});

const runSys = guarded("sy-out", (out) => {
  const c = +$("sy-c").value;
  $("sy-cv").textContent = `${c.toFixed(1)} dB`;
  const v = Array.from(throughputCdf(c, $("sy-p").checked));
  const n = (v.length - 2) / 2;
  const hd = v.slice(2, 2 + n).map((x) => x / 1e6), fd = v.slice(2 + n).map((x) => x / 1e6);
  const ps = hd.map((_, i) => (i + 1) / n);
  plot($("sy-plot"), [
    { xs: [0, ...hd], ys: [0, ...ps], color: "#7f7f7f", label: "half duplex", step: true },
    { xs: [0, ...fd], ys: [0, ...ps], color: "#9467bd", label: "full duplex", step: true },
  ], "throughput per MS, Mbit/s", "CDF");
  const gain = 100 * (v[1] / v[0] - 1);
  out.textContent = `mean ${(v[0] / 1e6).toFixed(1)} Mbit/s half duplex, ${(v[1] / 1e6).toFixed(1)} Mbit/s full duplex (${gain >= 0 ? "+" : ""}${gain.toFixed(1)} %)`;
});

await init();
$("am-run").onclick = runAm;
$("lk-run").onclick = runLink;
$("sy-c").oninput = runSys;
$("sy-p").onchange = runSys;
runAm();
runLink();
runSys();
