// Wire types for the gateway API. Field names mirror the server's
// FORMATS.md; do not rename casually.

export interface ChatResponse {
  session_id: string;
  utterance: string;
  reply: string;
  end_of_exchange: boolean;
  turn_seq: number;
  suggestions: string[];
}

export type StateValue = { on: boolean } | { value: number; unit?: string };

export interface DeviceStatePayload {
  device_id: string;
  value: StateValue;
  updated_at: string;
}

export interface DevicePayload {
  id: string;
  name: string;
  kind: string;
  supported_actions: string[];
  emits_events: boolean;
  state: DeviceStatePayload;
}

export interface ClockPayload {
  mode: 'virtual' | 'wall';
  now: string;
}

export interface DevicesPayload {
  devices: DevicePayload[];
  clock: ClockPayload;
}

export interface RulePayload {
  id: string;
  kind: string;
  device_id: string;
  text: string;
  created_by: string;
}

export interface RulesPayload {
  rules: RulePayload[];
}

export interface LogEntryPayload {
  seq: number;
  at: string;
  actor: { kind: 'user' | 'rule' | 'event'; [key: string]: unknown };
  effect: { kind: 'action_performed' | 'rule_created' | 'rule_removed';
            [key: string]: unknown };
}

export interface LogPayload {
  entries: LogEntryPayload[];
}

export interface StateChangeEvent {
  device_id: string;
  old: StateValue;
  new: StateValue;
  at: string;
}

export type StreamEvent =
  | { type: 'reply'; data: ChatResponse }
  | { type: 'state_change'; data: StateChangeEvent }
  | { type: 'log_append'; data: LogEntryPayload }
  | { type: 'clock'; data: ClockPayload };

export function describeValue(value: StateValue): string {
  if ('on' in value) {
    return value.on ? 'on' : 'off';
  }
  const unit = value.unit ? ` ${value.unit}` : '';
  return `${value.value}${unit}`;
}

export function isOn(value: StateValue): boolean {
  return 'on' in value && value.on;
}
