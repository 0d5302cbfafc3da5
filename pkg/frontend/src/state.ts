// Client-side state: transcript, device tiles, rules, log tail, clock.
// The store is a pure reducer over chat responses, stream events and
// resync payloads; the DOM layer subscribes and re-renders.

import type {
  ChatResponse, ClockPayload, DevicePayload, DevicesPayload, LogEntryPayload,
  LogPayload, RulePayload, RulesPayload, StateValue, StreamEvent,
} from './types.js';

export interface TranscriptEntry {
  speaker: 'you' | 'bot';
  text: string;
  turnSeq: number; // 0 while a send is in flight
  pending?: boolean;
  failed?: boolean;
}

export interface DeviceTile {
  id: string;
  name: string;
  kind: string;
  value: StateValue;
}

const LOG_TAIL_LIMIT = 100;

export interface ApplyResult {
  rulesChanged: boolean;
}

export class UiStore {
  readonly transcript: TranscriptEntry[] = [];
  readonly devices = new Map<string, DeviceTile>();
  rules: RulePayload[] = [];
  logTail: LogEntryPayload[] = [];
  clock: ClockPayload | null = null;
  suggestions: string[] = [];
  connected = false;

  private listeners: Array<() => void> = [];

  constructor(readonly sessionId: string) {}

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  // -- conversation ---------------------------------------------------

  noteSend(text: string): void {
    this.transcript.push({ speaker: 'you', text, turnSeq: 0, pending: true });
    this.suggestions = [];
    this.notify();
  }

  applyChatResponse(response: ChatResponse): void {
    const pending = [...this.transcript].reverse()
      .find((entry) => entry.speaker === 'you' && entry.pending);
    const seen = this.transcript.some((entry) => entry.speaker === 'bot'
                                      && entry.turnSeq === response.turn_seq);
    if (seen) {
      // The stream delivered this turn first; drop the optimistic copy.
      if (pending) {
        this.transcript.splice(this.transcript.indexOf(pending), 1);
      }
    } else {
      if (pending) {
        pending.pending = false;
        pending.failed = false;
        pending.turnSeq = response.turn_seq;
      }
      this.transcript.push({ speaker: 'bot', text: response.reply,
                             turnSeq: response.turn_seq });
    }
    this.suggestions = [...response.suggestions];
    this.notify();
  }

  markSendFailed(): void {
    const pending = [...this.transcript].reverse()
      .find((entry) => entry.speaker === 'you' && entry.pending);
    if (pending) {
      pending.pending = false;
      pending.failed = true;
      this.notify();
    }
  }

  // -- resync and stream ----------------------------------------------

  applyResync(devices: DevicesPayload, rules: RulesPayload, log: LogPayload): void {
    this.devices.clear();
    for (const device of devices.devices) {
      this.devices.set(device.id, this.tileOf(device));
    }
    this.clock = devices.clock;
    this.rules = rules.rules;
    this.logTail = log.entries.slice(-LOG_TAIL_LIMIT);
    this.notify();
  }

  private tileOf(device: DevicePayload): DeviceTile {
    return { id: device.id, name: device.name, kind: device.kind,
             value: device.state.value };
  }

  applyStreamEvent(event: StreamEvent): ApplyResult {
    let rulesChanged = false;
    switch (event.type) {
      case 'state_change': {
        const tile = this.devices.get(event.data.device_id);
        if (tile) {
          tile.value = event.data.new;
        }
        break;
      }
      case 'log_append': {
        this.logTail.push(event.data);
        if (this.logTail.length > LOG_TAIL_LIMIT) {
          this.logTail.splice(0, this.logTail.length - LOG_TAIL_LIMIT);
        }
        const kind = event.data.effect.kind;
        rulesChanged = kind === 'rule_created' || kind === 'rule_removed';
        break;
      }
      case 'reply': {
        if (event.data.session_id !== this.sessionId) break;
        if (this.transcript.some((entry) => entry.speaker === 'bot'
                                 && entry.turnSeq === event.data.turn_seq)) break;
        const pending = [...this.transcript].reverse()
          .find((entry) => entry.speaker === 'you' && entry.pending);
        if (pending) {
          // This window's own send, stream beat the fetch response.
          pending.pending = false;
          pending.turnSeq = event.data.turn_seq;
        } else {
          // Another window of the same session.
          this.transcript.push({ speaker: 'you', text: event.data.utterance,
                                 turnSeq: event.data.turn_seq });
        }
        this.transcript.push({ speaker: 'bot', text: event.data.reply,
                               turnSeq: event.data.turn_seq });
        this.suggestions = [...event.data.suggestions];
        break;
      }
      case 'clock':
        this.clock = event.data;
        break;
    }
    this.notify();
    return { rulesChanged };
  }

  setConnected(connected: boolean): void {
    this.connected = connected;
    this.notify();
  }

  setRules(rules: RulesPayload): void {
    this.rules = rules.rules;
    this.notify();
  }
}
