/**
 * DOM rendering. The whole screen is a function of the client state plus a
 * little local form state; everything shown is server-sent.
 */
import { renderLineChart } from "./chart.js";
import { ClientState, SessionClient } from "./client.js";
import { QuestionnaireAnswers } from "./protocol.js";

export interface ViewOptions {
  showChart: boolean;
  showUtility: boolean; // config flag: hide the running score for fidelity runs
}

const money = (v: number) => (v < 0 ? `−${Math.abs(v).toFixed(2)}` : v.toFixed(2));

export function render(
  root: HTMLElement,
  state: ClientState,
  client: SessionClient,
  opts: ViewOptions,
): void {
  root.textContent = "";
  if (state.banner) {
    const banner = el("div", "banner", state.banner);
    banner.setAttribute("role", "alert");
    root.appendChild(banner);
  }
  if (state.instructions) {
    root.appendChild(renderInstructions(state, client));
    return;
  }
  switch (state.phase) {
    case "connecting":
    case "disconnected":
      root.appendChild(el("p", "status", "Connecting to the session server…"));
      break;
    case "play":
      root.appendChild(renderDecision(state, client, opts));
      break;
    case "questionnaire":
      root.appendChild(renderQuestionnaire(state, client));
      break;
    case "complete":
      root.appendChild(renderComplete(state));
      break;
  }
}

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderInstructions(state: ClientState, client: SessionClient): HTMLElement {
  const modal = el("div", "modal");
  const card = el("div", "card instructions");
  card.appendChild(el("h2", undefined, "Instructions"));
  card.appendChild(el("p", undefined, state.instructions!.text));
  const ok = el("button", "primary", "I understand, continue") as HTMLButtonElement;
  ok.autofocus = true;
  ok.addEventListener("click", () => client.acknowledgeInstructions());
  card.appendChild(ok);
  modal.appendChild(card);
  return modal;
}

function renderDecision(
  state: ClientState,
  client: SessionClient,
  opts: ViewOptions,
): HTMLElement {
  const view = state.view!;
  const wrap = el("div", "decision");

  const head = el("div", "statusbar");
  head.appendChild(el("span", undefined, `Round ${view.round}`));
  head.appendChild(el("span", undefined, `Period ${view.period}`));
  if (opts.showUtility) {
    head.appendChild(el("span", undefined, `Score this round: ${view.roundUtility.toFixed(2)}`));
  }
  wrap.appendChild(head);

  const facts = el("dl", "facts");
  const fact = (label: string, value: string, cls?: string) => {
    facts.appendChild(el("dt", undefined, label));
    facts.appendChild(el("dd", cls, value));
  };
  fact("Income this period", money(view.income));
  fact(
    view.assetsPrev < 0 ? "Debt carried over" : "Savings carried over",
    money(view.assetsPrev),
    view.assetsPrev < 0 ? "debt" : "savings",
  );
  fact("Wealth available", money(view.wealth));
  wrap.appendChild(facts);

  const form = el("form", "consume") as HTMLFormElement;
  const label = el("label", undefined, "Consume this period:") as HTMLLabelElement;
  label.htmlFor = "consumption";
  const input = el("input") as HTMLInputElement;
  input.id = "consumption";
  input.type = "text";
  input.inputMode = "decimal";
  input.autocomplete = "off";
  const submit = el("button", "primary", "Submit") as HTMLButtonElement;
  submit.type = "submit";

  if (view.finalPeriod) {
    input.value = Math.max(0, view.wealth).toFixed(2);
    input.disabled = true;
    wrap.appendChild(
      el("p", "notice", "Final period: all remaining wealth is consumed automatically."),
    );
  } else {
    input.autofocus = true;
  }
  submit.disabled = state.pendingSubmit;
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    client.submitConsumption(input.value);
  });
  form.append(label, input, submit);
  wrap.appendChild(form);
  if (state.inputError) {
    const err = el("p", "field-error", state.inputError);
    err.setAttribute("role", "alert");
    wrap.appendChild(err);
  }

  wrap.appendChild(renderHistory(state, opts));
  return wrap;
}

function renderHistory(state: ClientState, opts: ViewOptions): HTMLElement {
  const view = state.view!;
  const section = el("section", "history");
  section.appendChild(el("h3", undefined, "This round so far"));
  const table = el("table") as HTMLTableElement;
  const thead = el("thead");
  const hr = el("tr");
  for (const h of ["Period", "Income", "Consumed", "Savings/Debt"]) {
    hr.appendChild(el("th", undefined, h));
  }
  thead.appendChild(hr);
  table.appendChild(thead);
  const tbody = el("tbody");
  for (const rec of view.history) {
    const tr = el("tr");
    tr.appendChild(el("td", undefined, String(rec.period)));
    tr.appendChild(el("td", undefined, money(rec.income)));
    tr.appendChild(el("td", undefined, money(rec.consumption)));
    tr.appendChild(el("td", rec.assets < 0 ? "debt" : "savings", money(rec.assets)));
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  section.appendChild(table);

  if (opts.showChart && view.history.length > 1) {
    section.appendChild(
      renderLineChart([
        {
          label: "income",
          color: "#3366cc",
          points: view.history.map((r) => ({ x: r.period, y: r.income })),
        },
        {
          label: "consumption",
          color: "#cc3333",
          points: view.history.map((r) => ({ x: r.period, y: r.consumption })),
        },
      ]),
    );
  }
  return section;
}

function renderQuestionnaire(state: ClientState, client: SessionClient): HTMLElement {
  const form = state.questionnaireForm;
  const wrap = el("div", "questionnaire");
  wrap.appendChild(el("h2", undefined, "Final questionnaire"));
  if (!form) {
    wrap.appendChild(el("p", "status", "Loading form…"));
    return wrap;
  }
  const f = el("form") as HTMLFormElement;

  const crtSection = el("fieldset");
  crtSection.appendChild(el("legend", undefined, "A few questions"));
  const crtInputs: HTMLInputElement[] = [];
  form.crt.forEach((item) => {
    const label = el("label", "crt-item", item.text) as HTMLLabelElement;
    const input = el("input") as HTMLInputElement;
    input.type = "text";
    input.inputMode = "decimal";
    input.name = `crt_${item.index}`;
    label.appendChild(input);
    crtInputs.push(input);
    crtSection.appendChild(label);
  });
  const known = el("label", "crt-known") as HTMLLabelElement;
  const knownBox = el("input") as HTMLInputElement;
  knownBox.type = "checkbox";
  known.append(knownBox, document.createTextNode(` ${form.crt_known_prompt}`));
  crtSection.appendChild(known);
  f.appendChild(crtSection);

  const mplSection = el("fieldset");
  mplSection.appendChild(
    el("legend", undefined, "For each row, pick the option you prefer (hypothetical)"),
  );
  const mplTable = el("table", "mpl") as HTMLTableElement;
  const mh = el("tr");
  ["#", "Safe option", "", "Lottery option", ""].forEach((h) =>
    mh.appendChild(el("th", undefined, h)),
  );
  mplTable.appendChild(mh);
  form.mpl.forEach((row) => {
    const tr = el("tr");
    tr.appendChild(el("td", undefined, String(row.index)));
    tr.appendChild(el("td", undefined, row.safe));
    const safeCell = el("td");
    const safeRadio = el("input") as HTMLInputElement;
    safeRadio.type = "radio";
    safeRadio.name = `mpl_${row.index}`;
    safeRadio.value = "safe";
    safeCell.appendChild(safeRadio);
    tr.appendChild(safeCell);
    tr.appendChild(el("td", undefined, row.lottery));
    const lotCell = el("td");
    const lotRadio = el("input") as HTMLInputElement;
    lotRadio.type = "radio";
    lotRadio.name = `mpl_${row.index}`;
    lotRadio.value = "lottery";
    lotCell.appendChild(lotRadio);
    tr.appendChild(lotCell);
    mplTable.appendChild(tr);
  });
  mplSection.appendChild(mplTable);
  f.appendChild(mplSection);

  const demo = el("fieldset");
  demo.appendChild(el("legend", undefined, "About you"));
  const demoInputs: Record<string, HTMLInputElement> = {};
  for (const field of form.demographics) {
    const label = el("label", undefined, field.replace(/_/g, " ") + ": ") as HTMLLabelElement;
    const input = el("input") as HTMLInputElement;
    input.type = "text";
    input.name = field;
    label.appendChild(input);
    demo.appendChild(label);
    demoInputs[field] = input;
  }
  f.appendChild(demo);

  const errBox = el("p", "field-error");
  errBox.setAttribute("role", "alert");
  const submit = el("button", "primary", "Submit and finish") as HTMLButtonElement;
  submit.type = "submit";
  submit.disabled = state.pendingSubmit;
  f.appendChild(errBox);
  f.appendChild(submit);

  f.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const answers: QuestionnaireAnswers = {
      crt_responses: crtInputs.map((i) => i.value.trim()),
      crt_known: knownBox.checked,
      mpl_choices: form.mpl.map((row) => {
        const checked = f.querySelector<HTMLInputElement>(
          `input[name="mpl_${row.index}"]:checked`,
        );
        return checked?.value ?? "";
      }),
      gender: demoInputs["gender"]?.value ?? "",
      field_of_study: demoInputs["field_of_study"]?.value ?? "",
      nationality: demoInputs["nationality"]?.value ?? "",
    };
    const missing = client.submitQuestionnaire(answers);
    errBox.textContent = missing.length
      ? `Please complete: ${missing.join(", ")}`
      : "";
  });

  wrap.appendChild(f);
  return wrap;
}

function renderComplete(state: ClientState): HTMLElement {
  const wrap = el("div", "complete card");
  wrap.appendChild(el("h2", undefined, "Session complete"));
  wrap.appendChild(
    el("p", undefined,
       `Thank you for participating. Your payment: $${state.paymentTotal?.toFixed(2)}`),
  );
  return wrap;
}
