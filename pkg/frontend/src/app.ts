// DOM wiring: chat panel with quick-reply chips, live device tiles,
// rules panel, log tail and virtual-clock controls. The UI is a pure
// client: every mutation goes through the chat or sim endpoints.

import { ApiClient } from './api.js';
import { StreamClient, WebSocketFactory } from './stream.js';
import { UiStore } from './state.js';
import { describeValue, isOn } from './types.js';

export interface AppHandle {
  store: UiStore;
  sendUtterance(text: string): Promise<void>;
  destroy(): void;
}

export interface AppOptions {
  api: ApiClient;
  wsFactory: WebSocketFactory;
  streamUrl: string;
  sessionId?: string;
  reconnectDelayMs?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mountApp(root: HTMLElement, options: AppOptions): AppHandle {
  const sessionId = options.sessionId
    ?? `ui-${Math.random().toString(36).slice(2, 10)}`;
  const store = new UiStore(sessionId);
  const api = options.api;

  root.innerHTML = '';
  const chatPanel = el('section', 'chat-panel');
  const transcriptBox = el('div', 'transcript');
  const chipsBox = el('div', 'chips');
  const form = el('form', 'chat-form');
  const input = el('input', 'chat-input') as HTMLInputElement;
  input.placeholder = 'Say something, e.g. "turn on the kitchen light"';
  const send = el('button', 'chat-send', 'Send') as HTMLButtonElement;
  send.type = 'submit';
  send.disabled = true;
  form.append(input, send);
  chatPanel.append(transcriptBox, chipsBox, form);

  const dashboard = el('section', 'dashboard');
  const clockBox = el('div', 'clock-box');
  const tilesBox = el('div', 'tiles');
  const rulesBox = el('div', 'rules');
  const logBox = el('div', 'log-tail');
  dashboard.append(clockBox, tilesBox, rulesBox, logBox);

  root.append(chatPanel, dashboard);

  async function sendUtterance(text: string): Promise<void> {
    const utterance = text.trim();
    if (!utterance) return;
    store.noteSend(utterance);
    try {
      const response = await api.chat(sessionId, utterance);
      store.applyChatResponse(response);
    } catch {
      store.markSendFailed();
    }
  }

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const text = input.value;
    input.value = '';
    send.disabled = true;
    void sendUtterance(text);
  });
  input.addEventListener('input', () => {
    send.disabled = input.value.trim() === '';
  });

  async function resync(): Promise<void> {
    const [devices, rules, log] = await Promise.all([
      api.devices(), api.rules(), api.log(),
    ]);
    store.applyResync(devices, rules, log);
  }

  async function refreshRules(): Promise<void> {
    store.setRules(await api.rules());
  }

  const stream = new StreamClient(options.streamUrl, {
    onOpen: () => {
      store.setConnected(true);
      void resync();
    },
    onClose: () => store.setConnected(false),
    onEvent: (event) => {
      const { rulesChanged } = store.applyStreamEvent(event);
      if (rulesChanged) void refreshRules();
    },
  }, options.wsFactory, options.reconnectDelayMs);

  function render(): void {
    transcriptBox.innerHTML = '';
    for (const entry of store.transcript) {
      const bubble = el('div', `bubble ${entry.speaker}`
        + (entry.pending ? ' pending' : '') + (entry.failed ? ' failed' : ''));
      bubble.textContent = `${entry.speaker === 'you' ? 'you' : 'bot'}: ${entry.text}`;
      if (entry.failed) {
        const retry = el('button', 'retry', 'retry');
        retry.addEventListener('click', () => void sendUtterance(entry.text));
        bubble.append(retry);
      }
      transcriptBox.append(bubble);
    }

    chipsBox.innerHTML = '';
    for (const suggestion of store.suggestions) {
      const chip = el('button', 'chip', suggestion);
      chip.addEventListener('click', () => void sendUtterance(suggestion));
      chipsBox.append(chip);
    }

    clockBox.innerHTML = '';
    if (store.clock) {
      clockBox.append(el('span', 'clock-now',
        `${store.clock.mode} clock — ${store.clock.now}`));
      if (store.clock.mode === 'virtual') {
        for (const [label, seconds] of
             [['+1 min', 60], ['+1 hour', 3600], ['+1 day', 86400]] as const) {
          const button = el('button', 'advance', label);
          button.addEventListener('click', () => void api.advanceClock(seconds));
          clockBox.append(button);
        }
      }
    }
    clockBox.append(el('span', `link ${store.connected ? 'up' : 'down'}`,
      store.connected ? 'live' : 'reconnecting…'));

    tilesBox.innerHTML = '';
    for (const tile of store.devices.values()) {
      const node = el('div', `tile${isOn(tile.value) ? ' on' : ''}`);
      node.dataset.deviceId = tile.id;
      node.append(el('div', 'tile-name', tile.name));
      node.append(el('div', 'tile-state', describeValue(tile.value)));
      tilesBox.append(node);
    }

    rulesBox.innerHTML = '';
    rulesBox.append(el('h2', undefined, 'Rules'));
    if (store.rules.length === 0) {
      rulesBox.append(el('div', 'rule empty', 'No active rules.'));
    }
    for (const rule of store.rules) {
      rulesBox.append(el('div', 'rule', rule.text));
    }

    logBox.innerHTML = '';
    logBox.append(el('h2', undefined, 'Log'));
    for (const entry of store.logTail.slice(-12)) {
      logBox.append(el('div', 'log-entry',
        `#${entry.seq} ${entry.at} ${entry.actor.kind} ${entry.effect.kind}`));
    }
  }

  const unsubscribe = store.subscribe(render);
  render();
  stream.connect();

  return {
    store,
    sendUtterance,
    destroy: () => {
      unsubscribe();
      stream.close();
    },
  };
}
