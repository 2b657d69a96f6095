import init, { spectrum, rank_sweep, triplets } from "./pkg/ksvd_web.js";

const COLORS = { dense: "#444", fsvd: "#1f77b4", rsvd: "#d62728", absolute: "#1f77b4", relative: "#2ca02c" };

// series: [{ name, points: [[x, y], ...], dashed? }]
function plot(canvas, series, { logY = false, logX = false, yLabel = "", xLabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 64, R = 12, T = 12, B = 36;
  ctx.clearRect(0, 0, W, H);
  const tx = logX ? Math.log10 : (v) => v;
  const ty = logY ? (v) => Math.log10(Math.max(v, 1e-300)) : (v) => v;
  const pts = series.flatMap((s) => s.points).filter(([x, y]) => isFinite(tx(x)) && isFinite(ty(y)));
  if (!pts.length) return;
  let [x0, x1] = [Math.min(...pts.map((p) => tx(p[0]))), Math.max(...pts.map((p) => tx(p[0])))];
  let [y0, y1] = [Math.min(...pts.map((p) => ty(p[1]))), Math.max(...pts.map((p) => ty(p[1])))];
  if (x0 === x1) { x0 -= 1; x1 += 1; }
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const sx = (v) => L + ((tx(v) - x0) / (x1 - x0)) * (W - L - R);
  const sy = (v) => H - B - ((ty(v) - y0) / (y1 - y0)) * (H - T - B);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.beginPath();
  ctx.moveTo(L, T); ctx.lineTo(L, H - B); ctx.lineTo(W - R, H - B);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const v = y0 + ((y1 - y0) * i) / 4;
    const y = H - B - ((v - y0) / (y1 - y0)) * (H - T - B);
    ctx.fillText(logY ? `1e${v.toFixed(1)}` : v.toPrecision(3), 4, y + 4);
    const u = x0 + ((x1 - x0) * i) / 4;
    const x = L + ((u - x0) / (x1 - x0)) * (W - L - R);
    ctx.fillText(logX ? `1e${u.toFixed(0)}` : u.toFixed(0), x - 10, H - B + 16);
  }
  ctx.fillText(yLabel, L + 6, T + 10);
  ctx.fillText(xLabel, W - R - 60, H - 4);

  for (const s of series) {
    ctx.strokeStyle = COLORS[s.name] || "#000";
    ctx.setLineDash(s.dashed ? [5, 4] : []);
    ctx.lineWidth = 2;
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function legend(el, names) {
  el.innerHTML = names.map((n) => `<span><i style="background:${COLORS[n]}"></i>${n}</span>`).join("");
}

function form(section) {
  const f = section.querySelector("form");
  return Object.fromEntries([...new FormData(f)].map(([k, v]) => [k, Number(v)]));
}

function wire(id, run) {
  const section = document.getElementById(id);
  const out = section.querySelector(".out");
  const go = () => {
    out.classList.remove("err");
    try {
      run(form(section), section.querySelector("canvas"), out, section.querySelector(".legend"));
    } catch (e) {
      out.classList.add("err");
      out.textContent = String(e.message || e);
    }
  };
  section.querySelector("form").addEventListener("submit", (e) => { e.preventDefault(); go(); });
  go();
}

const indexed = (ys) => ys.map((y, i) => [i + 1, y]);

await init();

wire("spectrum", (v, canvas, out, leg) => {
  const rep = JSON.parse(spectrum(v.rows, v.cols, v.rank, v.r, v.p, v.noise, v.seed));
  legend(leg, ["dense", "fsvd", "rsvd"]);
  plot(canvas, [
    { name: "dense", points: indexed(rep.dense) },
    { name: "fsvd", points: indexed(rep.fsvd), dashed: true },
    { name: "rsvd", points: indexed(rep.rsvd) },
  ], { logY: true, yLabel: "sigma_i", xLabel: "index i" });
  const ms = rep.millis;
  out.textContent =
    `bidiagonalization stopped after k' = ${rep.k_prime} steps\n` +
    `err_rel  fsvd ${rep.err_rel_fsvd.toExponential(2)}   rsvd ${rep.err_rel_rsvd.toExponential(2)}\n` +
    `time     dense ${ms.dense.toFixed(0)} ms   fsvd ${ms.fsvd.toFixed(0)} ms   rsvd ${ms.rsvd.toFixed(0)} ms`;
});

wire("rank", (v, canvas, out, leg) => {
  const rep = JSON.parse(rank_sweep(v.rows, v.cols, v.rank, v.noise, v.seed));
  legend(leg, ["absolute", "relative"]);
  plot(canvas, [
    { name: "absolute", points: rep.sweep.map((p) => [p.eps, p.absolute]) },
    { name: "relative", points: rep.sweep.map((p) => [p.eps, p.relative]), dashed: true },
  ], { logX: true, yLabel: "estimated rank", xLabel: "threshold eps" });
  out.textContent =
    `k' = ${rep.k_prime}; absolute mode counts sigma^2 > eps, relative mode counts sigma > eps * sigma_1\n` +
    rep.sweep.map((p) => `eps ${p.eps.toExponential(0)}: ${p.absolute} / ${p.relative}`).join("   ");
});

wire("triplets", (v, canvas, out, leg) => {
  const rep = JSON.parse(triplets(v.rows, v.cols, v.rank, v.r, v.p, v.seed));
  legend(leg, ["fsvd", "rsvd"]);
  plot(canvas, [
    { name: "fsvd", points: indexed(rep.fsvd.q) },
    { name: "rsvd", points: indexed(rep.rsvd.q) },
  ], { yLabel: "q_i = (u_ref . u_i)(v_ref . v_i)", xLabel: "index i" });
  const minq = (q) => Math.min(...q).toFixed(6);
  const maxdev = (d) => Math.max(...d).toExponential(2);
  out.textContent =
    `min q     fsvd ${minq(rep.fsvd.q)}   rsvd ${minq(rep.rsvd.q)}\n` +
    `max |dsigma|  fsvd ${maxdev(rep.fsvd.sigma_dev)}   rsvd ${maxdev(rep.rsvd.sigma_dev)}`;
});
